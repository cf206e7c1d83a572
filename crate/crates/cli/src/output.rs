//! CSV assembly: a `#` comment header echoing the run configuration, the table,
//! and optional `#` footer lines. Floats carry 17 significant digits.

use sturmtx::config::ProblemFile;
use sturmtx::ValidatedProblem;

pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}

pub struct Report {
    header: Vec<String>,
    table: csv::Writer<Vec<u8>>,
    footer: Vec<String>,
}

impl Report {
    pub fn new(
        command: &str,
        problem_path: &str,
        params: &[(&str, String)],
        problem: &ValidatedProblem,
    ) -> Report {
        let mut header = vec![
            format!("sturmtx {}", env!("CARGO_PKG_VERSION")),
            format!("command = {command}"),
            format!("problem = {problem_path}"),
        ];
        header.extend(params.iter().map(|(k, v)| format!("{k} = {v}")));
        header.push("problem definition:".to_string());
        header.extend(
            ProblemFile::from_spec(problem.spec())
                .to_toml()
                .lines()
                .filter(|l| !l.is_empty())
                .map(|l| format!("  {l}")),
        );
        Report {
            header,
            table: csv::Writer::from_writer(Vec::new()),
            footer: Vec::new(),
        }
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.table
            .write_record(fields)
            .expect("in-memory CSV write");
    }

    pub fn note(&mut self, line: impl Into<String>) {
        self.footer.push(line.into());
    }

    pub fn finish(self) -> String {
        let mut out = String::new();
        for line in &self.header {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
        let table = self.table.into_inner().expect("in-memory CSV flush");
        out.push_str(&String::from_utf8(table).expect("CSV fields are UTF-8"));
        for line in &self.footer {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
        out
    }
}
