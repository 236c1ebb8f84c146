//! Model parameters and the mean-field state vector.
//!
//! All rates are measured in units of the cavity frequency, so `ModelParams`
//! carries only the dimensionless combinations
//!
//! ```text
//! kappa  = κ / ω_c        lambda = λ / ω_c
//! beta   = ω_a / ω_c      u      = 2 K N / ω_c
//! ```
//!
//! plus the atom number `n_atoms`, which only enters the fluctuation
//! prefactor 1/(2N). Atomic dissipation is fixed to zero.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// Tolerance on the spin length `X² + Y² + Z² = 1/4` for states produced here.
pub const SPIN_NORM_TOL: f64 = 1e-9;

/// Normalized, validated parameters of the dissipative Kerr–Rabi model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    kappa: f64,
    lambda: f64,
    beta: f64,
    u: f64,
    n_atoms: f64,
    gamma: f64,
}

impl ModelParams {
    pub fn new(kappa: f64, lambda: f64, beta: f64, u: f64, n_atoms: f64) -> Result<Self> {
        check_finite("kappa", kappa)?;
        check_finite("lambda", lambda)?;
        check_finite("beta", beta)?;
        check_finite("u", u)?;
        check_finite("n_atoms", n_atoms)?;
        if kappa < 0.0 {
            return Err(invalid("kappa", kappa, "must be >= 0"));
        }
        if lambda < 0.0 {
            return Err(invalid("lambda", lambda, "must be >= 0"));
        }
        if beta <= 0.0 {
            return Err(invalid("beta", beta, "must be > 0"));
        }
        if n_atoms <= 0.0 {
            return Err(invalid("n_atoms", n_atoms, "must be > 0"));
        }
        Ok(Self {
            kappa,
            lambda,
            beta,
            u,
            n_atoms,
            gamma: 0.0,
        })
    }

    /// Resonant parameters (`beta = 1`, `n_atoms = 1`).
    pub fn resonant(kappa: f64, lambda: f64, u: f64) -> Result<Self> {
        Self::new(kappa, lambda, 1.0, u, 1.0)
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn u(&self) -> f64 {
        self.u
    }
    pub fn n_atoms(&self) -> f64 {
        self.n_atoms
    }
    /// Always zero.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// The product `K N` in units of ω_c, i.e. `u / 2`.
    pub fn kerr_kn(&self) -> f64 {
        0.5 * self.u
    }

    pub fn with_kappa(self, kappa: f64) -> Result<Self> {
        Self::new(kappa, self.lambda, self.beta, self.u, self.n_atoms)
    }
    pub fn with_lambda(self, lambda: f64) -> Result<Self> {
        Self::new(self.kappa, lambda, self.beta, self.u, self.n_atoms)
    }
    pub fn with_beta(self, beta: f64) -> Result<Self> {
        Self::new(self.kappa, self.lambda, beta, self.u, self.n_atoms)
    }
    pub fn with_u(self, u: f64) -> Result<Self> {
        Self::new(self.kappa, self.lambda, self.beta, u, self.n_atoms)
    }
    pub fn with_n_atoms(self, n_atoms: f64) -> Result<Self> {
        Self::new(self.kappa, self.lambda, self.beta, self.u, n_atoms)
    }

    pub fn to_record(&self) -> NormalizedRecord {
        NormalizedRecord {
            kappa: self.kappa,
            lambda: self.lambda,
            beta: self.beta,
            u: self.u,
            n_atoms: self.n_atoms,
        }
    }
}

fn check_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, value, "must be finite"))
    }
}

fn invalid(name: &'static str, value: f64, reason: &'static str) -> Error {
    Error::InvalidParameter {
        name,
        value,
        reason,
    }
}

/// Parameters in physical units, before normalization by ω_c.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawParams {
    pub omega_c: f64,
    pub omega_a: f64,
    pub lambda: f64,
    pub kappa: f64,
    #[serde(rename = "kerr_K")]
    pub kerr_k: f64,
    pub n_atoms: f64,
    #[serde(default)]
    pub gamma: f64,
}

/// Normalize a physical parameter record by the cavity frequency.
pub fn validate_and_normalize(raw: &RawParams) -> Result<ModelParams> {
    check_finite("omega_c", raw.omega_c)?;
    check_finite("omega_a", raw.omega_a)?;
    check_finite("lambda", raw.lambda)?;
    check_finite("kappa", raw.kappa)?;
    check_finite("kerr_K", raw.kerr_k)?;
    check_finite("n_atoms", raw.n_atoms)?;
    check_finite("gamma", raw.gamma)?;
    if raw.omega_c <= 0.0 {
        return Err(invalid("omega_c", raw.omega_c, "must be > 0"));
    }
    if raw.gamma != 0.0 {
        return Err(Error::NonzeroGamma(raw.gamma));
    }
    let wc = raw.omega_c;
    ModelParams::new(
        raw.kappa / wc,
        raw.lambda / wc,
        raw.omega_a / wc,
        2.0 * raw.kerr_k * raw.n_atoms / wc,
        raw.n_atoms,
    )
}

/// Pre-normalized parameter record; the JSON form used for input and echoed in output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedRecord {
    pub kappa: f64,
    pub lambda: f64,
    pub beta: f64,
    pub u: f64,
    pub n_atoms: f64,
}

impl NormalizedRecord {
    pub fn validate(&self) -> Result<ModelParams> {
        ModelParams::new(self.kappa, self.lambda, self.beta, self.u, self.n_atoms)
    }
}

/// A possibly incomplete set of normalized parameters.
///
/// Used to merge a JSON parameter file with command-line overrides. The
/// unnormalized path (`omega_c` present) always yields a complete patch.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ParamsPatch {
    pub kappa: Option<f64>,
    pub lambda: Option<f64>,
    pub beta: Option<f64>,
    pub u: Option<f64>,
    pub n_atoms: Option<f64>,
}

impl ParamsPatch {
    /// Read a JSON object. Presence of `omega_c` selects the unnormalized keys
    /// `{omega_c, omega_a, lambda, kappa, kerr_K, n_atoms}`; otherwise the
    /// normalized keys `{kappa, lambda, beta, u, n_atoms}` are read, each
    /// optional. Unknown keys are ignored.
    pub fn from_json(value: &Value) -> Result<Self> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::Record("expected a JSON object".into()))?;
        if obj.contains_key("omega_c") {
            let raw: RawParams = serde_json::from_value(value.clone())?;
            let p = validate_and_normalize(&raw)?;
            return Ok(Self::from(p));
        }
        let get = |key: &str| -> Result<Option<f64>> {
            match obj.get(key) {
                None | Some(Value::Null) => Ok(None),
                Some(v) => v
                    .as_f64()
                    .map(Some)
                    .ok_or_else(|| Error::Record(format!("`{key}` is not a number"))),
            }
        };
        Ok(Self {
            kappa: get("kappa")?,
            lambda: get("lambda")?,
            beta: get("beta")?,
            u: get("u")?,
            n_atoms: get("n_atoms")?,
        })
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)?;
        Self::from_json(&value)
    }

    /// Fields set in `over` replace those in `self`.
    pub fn overridden_by(self, over: ParamsPatch) -> Self {
        Self {
            kappa: over.kappa.or(self.kappa),
            lambda: over.lambda.or(self.lambda),
            beta: over.beta.or(self.beta),
            u: over.u.or(self.u),
            n_atoms: over.n_atoms.or(self.n_atoms),
        }
    }

    /// Fill missing fields from `defaults` and validate.
    pub fn resolve(self, defaults: &NormalizedRecord) -> Result<ModelParams> {
        ModelParams::new(
            self.kappa.unwrap_or(defaults.kappa),
            self.lambda.unwrap_or(defaults.lambda),
            self.beta.unwrap_or(defaults.beta),
            self.u.unwrap_or(defaults.u),
            self.n_atoms.unwrap_or(defaults.n_atoms),
        )
    }
}

impl From<ModelParams> for ParamsPatch {
    fn from(p: ModelParams) -> Self {
        Self {
            kappa: Some(p.kappa),
            lambda: Some(p.lambda),
            beta: Some(p.beta),
            u: Some(p.u),
            n_atoms: Some(p.n_atoms),
        }
    }
}

/// Mean-field state: cavity quadratures `Q = √2 Re α`, `P = √2 Im α` and
/// the normalized collective spin `(X, Y, Z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldState {
    pub q: f64,
    pub p: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl MeanFieldState {
    /// The normal-phase fixed point, spin pointing down.
    pub const NORMAL: Self = Self {
        q: 0.0,
        p: 0.0,
        x: 0.0,
        y: 0.0,
        z: -0.5,
    };

    /// The inverted normal-phase fixed point (`Z = +1/2`), always unstable.
    pub const INVERTED: Self = Self {
        q: 0.0,
        p: 0.0,
        x: 0.0,
        y: 0.0,
        z: 0.5,
    };

    pub fn from_array(v: [f64; 5]) -> Self {
        Self {
            q: v[0],
            p: v[1],
            x: v[2],
            y: v[3],
            z: v[4],
        }
    }

    pub fn to_array(&self) -> [f64; 5] {
        [self.q, self.p, self.x, self.y, self.z]
    }

    /// `|α|² = (Q² + P²) / 2`.
    pub fn photon_number(&self) -> f64 {
        0.5 * (self.q * self.q + self.p * self.p)
    }

    /// `X² + Y² + Z² − 1/4`.
    pub fn spin_norm_defect(&self) -> f64 {
        self.x * self.x + self.y * self.y + self.z * self.z - 0.25
    }

    /// Rescale the spin onto the sphere of radius 1/2.
    pub fn project_spin(&mut self) {
        let r = (self.x * self.x + self.y * self.y + self.z * self.z).sqrt();
        if r > 0.0 {
            let f = 0.5 / r;
            self.x *= f;
            self.y *= f;
            self.z *= f;
        }
    }

    /// Image under the Z₂ symmetry `(Q, P, X, Y) → (−Q, −P, −X, −Y)`.
    pub fn z2_partner(&self) -> Self {
        Self {
            q: -self.q,
            p: -self.p,
            x: -self.x,
            y: -self.y,
            z: self.z,
        }
    }
}
