//! A tiny runner for acceptance criteria: each check runs under a time
//! limit, panics count as failures, and every outcome prints one line.

use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: u32,
    pub title: String,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub limit: Option<Duration>,
}

impl Outcome {
    pub fn line(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        let timing = match self.limit {
            Some(limit) => format!("{:.3}s, limit {}s", self.elapsed.as_secs_f64(), limit.as_secs_f64()),
            None => format!("{:.3}s", self.elapsed.as_secs_f64()),
        };
        format!("criterion {} [{verdict}] {}: {} ({timing})", self.id, self.title, self.detail)
    }
}

#[derive(Debug, Default)]
pub struct Suite {
    outcomes: Vec<Outcome>,
}

impl Suite {
    pub fn new() -> Suite {
        Suite::default()
    }

    /// Runs `check`; `Ok` carries a summary of what was verified, `Err`
    /// the reason for failure. Exceeding `limit` fails the criterion.
    pub fn run<F>(&mut self, id: u32, title: &str, limit: Option<Duration>, check: F) -> &Outcome
    where
        F: FnOnce() -> Result<String, String>,
    {
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(check));
        let elapsed = start.elapsed();
        let (mut passed, mut detail) = match result {
            Ok(Ok(detail)) => (true, detail),
            Ok(Err(reason)) => (false, reason),
            Err(payload) => (false, format!("panicked: {}", panic_message(payload.as_ref()))),
        };
        if let Some(limit) = limit {
            if elapsed > limit {
                passed = false;
                detail = format!("{detail}; exceeded time limit");
            }
        }
        let outcome = Outcome {
            id,
            title: title.to_owned(),
            passed,
            detail,
            elapsed,
            limit,
        };
        println!("{}", outcome.line());
        self.outcomes.push(outcome);
        self.outcomes.last().expect("just pushed")
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn failures(&self) -> usize {
        self.outcomes.iter().filter(|o| !o.passed).count()
    }
}

fn panic_message(payload: &(dyn std::any::Any + Send)) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        (*s).to_owned()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "non-string panic payload".to_owned()
    }
}

/// `Err` with a formatted message unless `cond` holds.
pub fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}
