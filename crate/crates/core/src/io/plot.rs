//! Study tables as CSV and as whitespace-separated plot data.

use std::io::Write;
use std::path::Path;

use crate::limits::Tabular;

/// `#`-header naming the plotted columns, then one line per row at 17
/// significant digits.
pub fn plot_data_text(table: &dyn Tabular) -> String {
    let names = table.columns();
    let cols = table.plot_columns();
    let mut out = String::from("#");
    for &c in &cols {
        out.push(' ');
        out.push_str(names[c]);
    }
    out.push('\n');
    for row in table.rows() {
        let line: Vec<String> = cols.iter().map(|&c| format!("{:.16e}", row[c])).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn emit_plot_data(table: &dyn Tabular, path: &Path) -> std::io::Result<()> {
    std::fs::write(path, plot_data_text(table))
}

/// Every column, shortest round-trip formatting.
pub fn write_table_csv(table: &dyn Tabular, w: impl Write) -> csv::Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(table.columns())?;
    for row in table.rows() {
        wr.serialize(row)?;
    }
    wr.flush()?;
    Ok(())
}
