use super::SynthError;

pub const DEFAULT_LAMBDA_MIN: f64 = 400.0;
pub const DEFAULT_LAMBDA_MAX: f64 = 700.0;
pub const DEFAULT_SAMPLES: usize = 31;
pub const MIN_SAMPLES: usize = 16;

/// Uniform wavelength grid in nanometres.
#[derive(Debug, Clone, PartialEq)]
pub struct Wavelengths {
    samples: Vec<f64>,
}

impl Default for Wavelengths {
    fn default() -> Self {
        Self::uniform(DEFAULT_LAMBDA_MIN, DEFAULT_LAMBDA_MAX, DEFAULT_SAMPLES)
            .expect("default grid is valid")
    }
}

impl Wavelengths {
    pub fn uniform(min: f64, max: f64, count: usize) -> Result<Self, SynthError> {
        if !(min.is_finite() && max.is_finite() && min > 0.0 && max > min) {
            return Err(SynthError::Invalid(format!(
                "wavelength range {min}..{max} is not increasing and positive"
            )));
        }
        if count < MIN_SAMPLES {
            return Err(SynthError::Invalid(format!(
                "wavelength grid needs at least {MIN_SAMPLES} samples, got {count}"
            )));
        }
        let step = (max - min) / (count - 1) as f64;
        let samples = (0..count).map(|i| min + step * i as f64).collect();
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Trapezoid quadrature weights.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let s = &self.samples;
        let n = s.len();
        (0..n)
            .map(|i| {
                let left = if i > 0 { s[i] - s[i - 1] } else { 0.0 };
                let right = if i + 1 < n { s[i + 1] - s[i] } else { 0.0 };
                0.5 * (left + right)
            })
            .collect()
    }
}

/// Parsed spectrum expression, evaluated lazily on a grid.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectrumExpr {
    Flat(f64),
    Gaussian {
        center: f64,
        width: f64,
        peak: f64,
        floor: f64,
    },
    Table(Vec<f64>),
    Scaled {
        base: String,
        factor: f64,
    },
}

fn number(tok: &str, what: &str) -> Result<f64, String> {
    let v: f64 = tok
        .parse()
        .map_err(|_| format!("{what}: '{tok}' is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{what}: '{tok}' is not finite"))
    }
}

impl SpectrumExpr {
    /// Syntax: `flat V`, `gaussian CENTER WIDTH PEAK [FLOOR]`,
    /// `table V1 V2 ...`, `scaled NAME FACTOR`.
    pub fn parse(text: &str) -> Result<Self, String> {
        let toks: Vec<&str> = text.split_whitespace().collect();
        let Some((&kind, args)) = toks.split_first() else {
            return Err("empty spectrum".into());
        };
        match (kind, args.len()) {
            ("flat", 1) => Ok(Self::Flat(number(args[0], "flat value")?)),
            ("gaussian", 3 | 4) => {
                let width = number(args[1], "gaussian width")?;
                if width <= 0.0 {
                    return Err(format!("gaussian width must be positive, got {width}"));
                }
                Ok(Self::Gaussian {
                    center: number(args[0], "gaussian center")?,
                    width,
                    peak: number(args[2], "gaussian peak")?,
                    floor: args
                        .get(3)
                        .map_or(Ok(0.0), |t| number(t, "gaussian floor"))?,
                })
            }
            ("table", n) if n > 0 => Ok(Self::Table(
                args.iter()
                    .map(|t| number(t, "table value"))
                    .collect::<Result<_, _>>()?,
            )),
            ("scaled", 2) => Ok(Self::Scaled {
                base: args[0].to_string(),
                factor: number(args[1], "scale factor")?,
            }),
            ("flat" | "gaussian" | "table" | "scaled", _) => {
                Err(format!("wrong number of arguments for '{kind}'"))
            }
            _ => Err(format!("unknown spectrum kind '{kind}'")),
        }
    }

    /// Evaluates a non-referencing expression; `Scaled` is resolved by the caller.
    pub(crate) fn eval_direct(&self, grid: &Wavelengths) -> Result<Vec<f64>, String> {
        match self {
            Self::Flat(v) => Ok(vec![*v; grid.len()]),
            Self::Gaussian {
                center,
                width,
                peak,
                floor,
            } => Ok(grid
                .samples()
                .iter()
                .map(|l| {
                    let z = (l - center) / width;
                    floor + peak * (-0.5 * z * z).exp()
                })
                .collect()),
            Self::Table(v) if v.len() == grid.len() => Ok(v.clone()),
            Self::Table(v) => Err(format!(
                "table has {} values but the wavelength grid has {}",
                v.len(),
                grid.len()
            )),
            Self::Scaled { .. } => unreachable!("scaled spectra are resolved by name"),
        }
    }
}
