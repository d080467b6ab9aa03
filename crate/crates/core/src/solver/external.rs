use std::path::PathBuf;
use std::process::Command;

use super::dump::{read_solution, write_instance};
use super::{LpInstance, LpSolution, LpSolver, SolverError};

/// Adapter that hands instances to an external program.
///
/// The program is invoked as `<command> <args...> <instance.lp> <solution.txt>`;
/// it must read the instance dump and write a solution file in the format
/// documented in [`super::dump`].
#[derive(Debug, Clone)]
pub struct ExternalSolver {
    pub command: PathBuf,
    pub args: Vec<String>,
}

impl ExternalSolver {
    pub fn new(command: impl Into<PathBuf>) -> Self {
        Self {
            command: command.into(),
            args: Vec::new(),
        }
    }
}

impl LpSolver for ExternalSolver {
    fn solve(&self, instance: &LpInstance) -> Result<LpSolution, SolverError> {
        instance.validate()?;
        let dir = tempfile::tempdir().map_err(|e| SolverError::External(e.to_string()))?;
        let inst_path = dir.path().join("instance.lp");
        let sol_path = dir.path().join("solution.txt");
        std::fs::write(&inst_path, write_instance(instance))
            .map_err(|e| SolverError::External(format!("writing instance: {e}")))?;

        let status = Command::new(&self.command)
            .args(&self.args)
            .arg(&inst_path)
            .arg(&sol_path)
            .status()
            .map_err(|e| {
                SolverError::External(format!("launching {}: {e}", self.command.display()))
            })?;
        if !status.success() {
            return Err(SolverError::External(format!(
                "{} exited with {status}",
                self.command.display()
            )));
        }
        let text = std::fs::read_to_string(&sol_path)
            .map_err(|e| SolverError::External(format!("reading solution: {e}")))?;
        read_solution(
            &text,
            instance.num_vars(),
            instance.eq.len(),
            instance.le.len(),
        )
    }
}
