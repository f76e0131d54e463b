use polarity::verify::{run_builtin, run_on_input, Bound, CheckRow, Suite};
use serde::Serialize;

use crate::args::{Format, VerifyArgs};
use crate::config::Settings;
use crate::error::{CliError, Result};
use crate::io;

#[derive(Serialize)]
struct Report<'a> {
    schema: u32,
    suite: Suite,
    source: String,
    passed: bool,
    rows: &'a [CheckRow],
}

fn csv(rows: &[CheckRow]) -> String {
    let mut out = String::from("suite,check,measured,bound,tolerance,pass,note\n");
    for r in rows {
        let bound = match r.bound {
            Bound::AtMost => "at_most",
            Bound::AtLeast => "at_least",
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.suite,
            io::csv_field(&r.check),
            io::csv_value(r.measured),
            bound,
            io::csv_value(r.tolerance),
            r.pass,
            io::csv_field(r.note.as_deref().unwrap_or(""))
        ));
    }
    out
}

pub fn verify(args: &VerifyArgs, settings: &Settings) -> Result<()> {
    let suite: Suite = args
        .suite
        .parse()
        .map_err(|e: polarity::Error| CliError::Usage(e.to_string()))?;
    let (rows, source) = match &args.input {
        Some(path) => {
            let f = io::load_function(path)?;
            (run_on_input(suite, &f), path.display().to_string())
        }
        None => (run_builtin(suite), "builtin".to_string()),
    };
    let failed: Vec<&CheckRow> = rows.iter().filter(|r| !r.pass).collect();
    let body = match settings.format {
        Format::Csv => csv(&rows),
        Format::Json => io::to_json(&Report {
            schema: 1,
            suite,
            source,
            passed: failed.is_empty(),
            rows: &rows,
        })?,
    };
    match &args.out {
        Some(path) => io::write_atomic(path, body.as_bytes())?,
        None => print!("{body}"),
    }
    for r in &failed {
        eprintln!("{r}");
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification {
            failed: failed.len(),
            total: rows.len(),
        })
    }
}
