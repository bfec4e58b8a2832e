use serde::Serialize;
use serde_json::Value;

/// Outcome of a command; fixes the exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Certified,
    Failed,
    Refuted,
    Unknown,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok | Status::Certified => 0,
            Status::Failed | Status::Refuted => 1,
            Status::Unknown => 2,
        }
    }

    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Status::Ok
        } else {
            Status::Failed
        }
    }
}

pub struct Report {
    pub command: &'static str,
    pub status: Status,
    pub data: Value,
    pub text: String,
}

#[derive(Serialize)]
struct Envelope<'a> {
    schema: &'static str,
    command: &'a str,
    status: Status,
    data: &'a Value,
}

pub const SCHEMA_ID: &str = "ssmcheck-report/1";

impl Report {
    pub fn new(command: &'static str, status: Status, data: impl Serialize, text: String) -> Self {
        let data = serde_json::to_value(data).expect("report data serializes");
        Report { command, status, data, text }
    }

    pub fn json(&self) -> String {
        let env = Envelope { schema: SCHEMA_ID, command: self.command, status: self.status, data: &self.data };
        let mut s = serde_json::to_string_pretty(&env).expect("report serializes");
        s.push('\n');
        s
    }
}
