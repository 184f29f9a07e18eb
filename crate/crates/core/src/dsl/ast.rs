use std::fmt;

use serde::{Serialize, Serializer};
use serde_json::Value;

use crate::dynamics::{InternalLevel, PulseConvention};

/// A parsed script: statements in source order.
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct Script {
    pub statements: Vec<Statement>,
}

impl Script {
    /// Statements that change or observe the state, i.e. everything but `expect`.
    pub fn step_count(&self) -> usize {
        self.statements
            .iter()
            .filter(|s| !matches!(s.step, Step::Expect(_)))
            .count()
    }

    pub fn steps(&self) -> impl Iterator<Item = &Step> {
        self.statements.iter().map(|s| &s.step)
    }
}

/// Canonical text form; one statement per line.
impl fmt::Display for Script {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.statements {
            writeln!(f, "{}", s.step)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Statement {
    /// 1-based source line.
    pub line: usize,
    #[serde(flatten)]
    pub step: Step,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "op", rename_all = "kebab-case")]
pub enum Step {
    Params {
        source: String,
        overrides: Vec<(String, String)>,
    },
    Cavity {
        id: String,
        initial: CavityInit,
        nmax: Option<usize>,
    },
    Atom {
        name: String,
        internal: InternalLevel,
        momentum: String,
    },
    Bragg {
        atom: String,
        cavity: String,
        duration: Duration,
        route: Option<InternalLevel>,
    },
    Pulse {
        atom: String,
        /// `None` for `all`.
        arm: Option<String>,
        theta: Angle,
        phi: Angle,
        convention: PulseConvention,
    },
    Ramsey {
        atom: String,
    },
    HadamardMomentum {
        atom: String,
    },
    Aux {
        id: String,
        cavity: String,
        duration: Duration,
        outcome: InternalLevel,
    },
    Splitter {
        in0: String,
        in1: String,
        out2: String,
        out3: String,
    },
    Postselect {
        modes: Vec<String>,
        total: usize,
    },
    Detect {
        modes: Vec<String>,
        choice: Choice<usize>,
    },
    Measure {
        atoms: Vec<String>,
        parts: Parts,
        choice: Choice<String>,
        entropy: Option<Vec<String>>,
    },
    Drop {
        ids: Vec<String>,
    },
    Oracle {
        branch: InternalLevel,
        beta_t: Angle,
        lmax: i32,
        tol: f64,
    },
    Expect(Expectation),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CavityInit {
    Vacuum,
    One,
    Plus,
}

impl CavityInit {
    fn token(self) -> &'static str {
        match self {
            CavityInit::Vacuum => "0",
            CavityInit::One => "1",
            CavityInit::Plus => "plus",
        }
    }
}

/// Interaction time: the module default or an explicit value.
#[derive(Debug, Clone, PartialEq)]
pub enum Duration {
    Auto,
    Fixed { text: String, seconds: f64 },
}

impl fmt::Display for Duration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Duration::Auto => f.write_str("auto"),
            Duration::Fixed { text, .. } => f.write_str(text),
        }
    }
}

impl Serialize for Duration {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Angle expression such as `pi`, `-pi/2` or `0.25`, kept as written.
#[derive(Debug, Clone, PartialEq)]
pub struct Angle {
    pub text: String,
    pub value: f64,
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl Serialize for Angle {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Choice<T> {
    Enumerate,
    Select(Vec<T>),
}

/// Which subsystems of each atom a `measure` reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Parts {
    pub internal: bool,
    pub momentum: bool,
}

impl fmt::Display for Parts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match (self.internal, self.momentum) {
            (true, true) => "int,mom",
            (true, false) => "int",
            _ => "mom",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StateLiteral {
    Inline(Value),
    File(String),
}

impl fmt::Display for StateLiteral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateLiteral::Inline(v) => write!(f, "{v}"),
            StateLiteral::File(p) => write!(f, "@{p}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "check", rename_all = "lowercase")]
pub enum Expectation {
    Fidelity { target: StateLiteral, threshold: f64 },
    Entropy { part: Vec<String>, value: f64, tol: f64 },
    Probability { value: f64, tol: f64 },
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Step::Params { source, overrides } => {
                write!(f, "params {source}")?;
                for (k, v) in overrides {
                    write!(f, " {k}={v}")?;
                }
                Ok(())
            }
            Step::Cavity { id, initial, nmax } => {
                write!(f, "cavity {id} {}", initial.token())?;
                if let Some(n) = nmax {
                    write!(f, " nmax={n}")?;
                }
                Ok(())
            }
            Step::Atom { name, internal, momentum } => write!(f, "atom {name} {internal} {momentum}"),
            Step::Bragg { atom, cavity, duration, route } => {
                write!(f, "bragg {atom} {cavity} {duration}")?;
                if let Some(r) = route {
                    write!(f, " route={r}")?;
                }
                Ok(())
            }
            Step::Pulse { atom, arm, theta, phi, convention } => write!(
                f,
                "pulse {atom} {} {theta} {phi} {convention}",
                arm.as_deref().unwrap_or("all")
            ),
            Step::Ramsey { atom } => write!(f, "ramsey {atom}"),
            Step::HadamardMomentum { atom } => write!(f, "hadamard-momentum {atom}"),
            Step::Aux { id, cavity, duration, outcome } => {
                write!(f, "aux {id} {cavity} {duration} {outcome}")
            }
            Step::Splitter { in0, in1, out2, out3 } => write!(f, "splitter {in0} {in1} {out2} {out3}"),
            Step::Postselect { modes, total } => write!(f, "postselect {} total={total}", join(modes)),
            Step::Detect { modes, choice } => {
                write!(f, "detect {} ", join(modes))?;
                match choice {
                    Choice::Enumerate => f.write_str("enumerate"),
                    Choice::Select(c) => write!(f, "select={}", join(c)),
                }
            }
            Step::Measure { atoms, parts, choice, entropy } => {
                write!(f, "measure {} {parts} ", join(atoms))?;
                match choice {
                    Choice::Enumerate => f.write_str("enumerate")?,
                    Choice::Select(c) => write!(f, "select={}", join(c))?,
                }
                if let Some(part) = entropy {
                    write!(f, " entropy={}", join(part))?;
                }
                Ok(())
            }
            Step::Drop { ids } => write!(f, "drop {}", join(ids)),
            Step::Oracle { branch, beta_t, lmax, tol } => {
                write!(f, "oracle branch={branch} beta_t={beta_t} lmax={lmax} tol={tol:?}")
            }
            Step::Expect(e) => match e {
                Expectation::Fidelity { target, threshold } => {
                    write!(f, "expect fidelity {target} {threshold:?}")
                }
                Expectation::Entropy { part, value, tol } => {
                    write!(f, "expect entropy {} {value:?} {tol:?}", join(part))
                }
                Expectation::Probability { value, tol } => {
                    write!(f, "expect probability {value:?} {tol:?}")
                }
            },
        }
    }
}
