//! Pass/fail bookkeeping for the acceptance target.
//!
//! Each criterion runs in isolation: a panic or error marks it failed and the
//! suite moves on. One line is printed per criterion as soon as it finishes.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

/// Outcome of one criterion: whether it held and the measured values.
pub struct Check {
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self {
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Default)]
pub struct Suite {
    results: Vec<(String, bool)>,
}

impl Suite {
    pub fn new() -> Self {
        Self::default()
    }

    /// Run `f`, print `[PASS]` or `[FAIL]` with its detail and wall time.
    pub fn criterion(&mut self, name: &str, f: impl FnOnce() -> Result<Check, String>) -> bool {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f));
        let secs = start.elapsed().as_secs_f64();
        let (passed, detail) = match outcome {
            Ok(Ok(c)) => (c.passed, c.detail),
            Ok(Err(e)) => (false, format!("error: {e}")),
            Err(p) => {
                let msg = p
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panic".into());
                (false, format!("panicked: {msg}"))
            }
        };
        let tag = if passed { "PASS" } else { "FAIL" };
        println!("[{tag}] {name}: {detail} ({secs:.1}s)");
        self.results.push((name.to_string(), passed));
        passed
    }

    pub fn passed(&self) -> usize {
        self.results.iter().filter(|r| r.1).count()
    }

    /// Summary line; a failure exit code when any criterion failed.
    pub fn finish(self) -> ExitCode {
        let total = self.results.len();
        let passed = self.passed();
        println!("acceptance: {passed}/{total} criteria passed");
        for (name, ok) in &self.results {
            if !ok {
                println!("  failed: {name}");
            }
        }
        if passed == total {
            ExitCode::SUCCESS
        } else {
            ExitCode::FAILURE
        }
    }
}
