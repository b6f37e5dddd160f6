//! Benchmark problem instances on disks.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fem::FemSystem;
use crate::mesh::{build_disk_mesh, Mesh};
use crate::projections::BoxSet;
use crate::scalar::Scalar;

/// Named scalar fields on the plane, so problems can be referenced from text config.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarField {
    Zero,
    Constant(f64),
    /// Radial target state of the first example (also its exact state).
    Example1Target,
    Example1Source,
    Example1Control,
    /// `|x|²`
    Example2Target,
}

impl ScalarField {
    pub fn eval<T: Scalar>(&self, p: [T; 2]) -> T {
        let r2 = p[0] * p[0] + p[1] * p[1];
        let half_ln2 = T::lit(0.5 * std::f64::consts::LN_2);
        let quarter = T::lit(0.25);
        let half = T::lit(0.5);
        let outer = || half_ln2 - half * r2.sqrt().ln();
        match *self {
            Self::Zero => T::zero(),
            Self::Constant(c) => T::lit(c),
            Self::Example1Target => {
                if r2 <= T::one() {
                    quarter + half_ln2 - quarter * r2
                } else {
                    outer()
                }
            }
            Self::Example1Source => {
                if r2 <= T::one() {
                    T::lit(1.25) + half_ln2 - quarter * r2
                } else {
                    outer()
                }
            }
            Self::Example1Control => {
                if r2 <= T::one() {
                    -quarter - half_ln2 + quarter * r2
                } else {
                    -outer()
                }
            }
            Self::Example2Target => r2,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Self::Zero => "zero".into(),
            Self::Constant(c) => format!("constant:{c}"),
            Self::Example1Target => "example1_target".into(),
            Self::Example1Source => "example1_source".into(),
            Self::Example1Control => "example1_control".into(),
            Self::Example2Target => "example2_target".into(),
        }
    }
}

impl fmt::Display for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for ScalarField {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(Self::Zero),
            "example1_target" => Ok(Self::Example1Target),
            "example1_source" => Ok(Self::Example1Source),
            "example1_control" => Ok(Self::Example1Control),
            "example2_target" => Ok(Self::Example2Target),
            _ => match s.strip_prefix("constant:") {
                Some(v) => {
                    v.trim().parse().map(Self::Constant).map_err(|_| Error::Parse(format!("bad constant field `{s}`")))
                }
                None => Err(Error::Unknown { kind: "field", name: s.into() }),
            },
        }
    }
}

/// Data of `min ½‖y - y_d‖² + α/2 ‖u‖²` s.t. `-Δy = u + f`, `y = 0` on the
/// boundary, `∫|∇y|² <= δ`, `a <= u <= b`, on the disk of the given radius.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec<T> {
    pub name: String,
    pub radius: T,
    pub alpha: T,
    pub box_set: BoxSet<T>,
    pub delta: T,
    pub target: ScalarField,
    pub source: ScalarField,
    pub exact_control: Option<ScalarField>,
    pub exact_state: Option<ScalarField>,
}

impl<T: Scalar> ProblemSpec<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius > T::zero()) {
            return Err(Error::InvalidArgument(format!("radius must be positive, got {}", self.radius)));
        }
        if !(self.alpha > T::zero()) {
            return Err(Error::InvalidArgument(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.delta > T::zero()) {
            return Err(Error::InvalidArgument(format!("delta must be positive, got {}", self.delta)));
        }
        BoxSet::new(self.box_set.lower, self.box_set.upper).map(|_| ())
    }

    pub fn with_alpha(&self, alpha: T) -> Self {
        Self { alpha, ..self.clone() }
    }

    pub fn mesh(&self, level: usize) -> Result<Mesh<T>> {
        build_disk_mesh(self.radius, level)
    }

    /// Nodal interpolants `(y_d, f)` on the interior dofs.
    pub fn data_vectors(&self, sys: &FemSystem<T>) -> Result<(Vec<T>, Vec<T>)> {
        let target = self.target;
        let source = self.source;
        Ok((sys.interpolate(|p| target.eval(p))?, sys.interpolate(|p| source.eval(p))?))
    }

    /// Label of the nominal mesh size `radius / 2^level`, e.g. `1/2^5`.
    pub fn h_label(&self, level: usize) -> String {
        h_label(self.radius.as_f64(), level)
    }
}

pub fn h_label(radius: f64, level: usize) -> String {
    let log = radius.log2();
    if log.fract() == 0.0 {
        let e = level as i64 - log as i64;
        if e > 0 {
            return format!("1/2^{e}");
        }
        return format!("{}", 2f64.powi(-e as i32));
    }
    format!("{}", radius / 2f64.powi(level as i32))
}

pub fn example1<T: Scalar>() -> ProblemSpec<T> {
    ProblemSpec {
        name: "example1".into(),
        radius: T::lit(2.0),
        alpha: T::one(),
        box_set: BoxSet { lower: T::lit(-2.0), upper: T::lit(2.0) },
        delta: T::lit(2.0),
        target: ScalarField::Example1Target,
        source: ScalarField::Example1Source,
        exact_control: Some(ScalarField::Example1Control),
        exact_state: Some(ScalarField::Example1Target),
    }
}

pub fn example2<T: Scalar>() -> ProblemSpec<T> {
    ProblemSpec {
        name: "example2".into(),
        radius: T::one(),
        alpha: T::lit(1e-2),
        box_set: BoxSet { lower: T::zero(), upper: T::lit(0.5) },
        delta: T::lit(0.5),
        target: ScalarField::Example2Target,
        source: ScalarField::Zero,
        exact_control: None,
        exact_state: None,
    }
}

pub fn by_name<T: Scalar>(name: &str) -> Result<ProblemSpec<T>> {
    match name {
        "example1" => Ok(example1()),
        "example2" => Ok(example2()),
        _ => Err(Error::Unknown { kind: "problem", name: name.into() }),
    }
}

/// One copy of `base` per α. The first example's sweep runs with the tighter
/// box `[-1/2, 1/2]` and budget `δ = 1`.
pub fn alpha_sweep_spec<T: Scalar>(base: &ProblemSpec<T>, alphas: &[T]) -> Result<Vec<ProblemSpec<T>>> {
    if alphas.is_empty() {
        return Err(Error::InvalidArgument("empty alpha list".into()));
    }
    let mut sweep_base = base.clone();
    if base.name == "example1" {
        sweep_base.box_set = BoxSet { lower: T::lit(-0.5), upper: T::lit(0.5) };
        sweep_base.delta = T::one();
    }
    alphas
        .iter()
        .map(|&a| {
            let spec = sweep_base.with_alpha(a);
            spec.validate().map(|_| spec)
        })
        .collect()
}
