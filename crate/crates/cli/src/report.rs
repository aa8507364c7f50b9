use serde::Serialize;
use serde_json::Value;

pub const SCHEMA: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Clone, Debug, Serialize)]
pub struct Claim {
    pub claim: String,
    /// The statement being checked, in words.
    pub anchor: String,
    pub params: Value,
    pub expected: Value,
    pub observed: Value,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Value>,
}

impl Claim {
    pub fn new(claim: &str, anchor: &str, params: Value, expected: impl Serialize, observed: impl Serialize) -> Claim {
        let expected = serde_json::to_value(expected).unwrap_or(Value::Null);
        let observed = serde_json::to_value(observed).unwrap_or(Value::Null);
        let status = if expected == observed { Status::Pass } else { Status::Fail };
        Claim { claim: claim.into(), anchor: anchor.into(), params, expected, observed, status, witness: None }
    }
    pub fn with_witness(mut self, w: impl Serialize) -> Claim {
        self.witness = serde_json::to_value(w).ok();
        self
    }
    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: u32,
    pub suite: String,
    pub params: Value,
    pub claims: Vec<Claim>,
    pub passed: bool,
}

impl Report {
    pub fn new(suite: &str, params: Value, claims: Vec<Claim>) -> Report {
        let passed = claims.iter().all(Claim::passed);
        Report { schema: SCHEMA, suite: suite.into(), params, claims, passed }
    }
    pub fn first_failure(&self) -> Option<&Claim> {
        self.claims.iter().find(|c| !c.passed())
    }
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
    /// Claims whose name starts with `prefix`.
    pub fn matching<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a Claim> + 'a {
        self.claims.iter().filter(move |c| c.claim.starts_with(prefix))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn status_follows_equality() {
        let c = Claim::new("x", "a", json!({}), 3, 3);
        assert!(c.passed());
        let c = Claim::new("x", "a", json!({}), 3, 4).with_witness("w");
        assert_eq!(c.status, Status::Fail);
        let r = Report::new("s", json!({}), vec![Claim::new("ok", "", json!({}), 1, 1), c]);
        assert!(!r.passed);
        assert_eq!(r.first_failure().unwrap().claim, "x");
        assert!(r.to_json().contains("\"schema\": 1"));
    }
}
