use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};

/// Highest total degree tracked in a moment table.
pub const MAX_DEGREE: usize = 4;

/// `E[xi^a conj(xi)^b]` for `a + b <= 4`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MixedMoments([[Complex64; MAX_DEGREE + 1]; MAX_DEGREE + 1]);

impl MixedMoments {
    pub fn from_fn(mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut t = [[Complex64::new(0.0, 0.0); MAX_DEGREE + 1]; MAX_DEGREE + 1];
        for (a, row) in t.iter_mut().enumerate() {
            for (b, cell) in row.iter_mut().enumerate() {
                if a + b <= MAX_DEGREE {
                    *cell = f(a, b);
                }
            }
        }
        Self(t)
    }

    /// Exact moments of a finitely supported law.
    pub fn of_atoms(atoms: &[(Complex64, f64)]) -> Self {
        Self::from_fn(|a, b| atoms.iter().map(|&(x, p)| x.powu(a as u32) * x.conj().powu(b as u32) * p).sum())
    }

    pub fn get(&self, a: usize, b: usize) -> Complex64 {
        assert!(a + b <= MAX_DEGREE, "moment degree {a}+{b} exceeds {MAX_DEGREE}");
        self.0[a][b]
    }

    /// The 14 index pairs with `1 <= a + b <= 4`.
    pub fn indices() -> impl Iterator<Item = (usize, usize)> {
        (0..=MAX_DEGREE).flat_map(|a| (0..=MAX_DEGREE - a).map(move |b| (a, b))).filter(|&(a, b)| a + b >= 1)
    }

    /// Moments of `xi - xi'` for an independent copy `xi'`.
    pub fn symmetrized(&self) -> Self {
        Self::from_fn(|a, b| {
            let mut acc = Complex64::new(0.0, 0.0);
            for p in 0..=a {
                for q in 0..=b {
                    let sign = if (a - p + b - q) % 2 == 0 { 1.0 } else { -1.0 };
                    let w = (binomial(a, p) * binomial(b, q)) as f64 * sign;
                    acc += self.get(p, q) * self.get(a - p, b - q) * w;
                }
            }
            acc
        })
    }
}

fn binomial(n: usize, k: usize) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

/// Declared moment profile of an entry law.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentProfile {
    pub mean: Complex64,
    pub second_abs: f64,
    pub fourth_abs: f64,
    pub pseudo_second: Complex64,
    pub mixed: MixedMoments,
}

impl MomentProfile {
    pub fn from_mixed(mixed: MixedMoments) -> Self {
        Self {
            mean: mixed.get(1, 0),
            second_abs: mixed.get(1, 1).re,
            fourth_abs: mixed.get(2, 2).re,
            pseudo_second: mixed.get(2, 0),
            mixed,
        }
    }

    /// Standard complex Gaussian: `E[xi^a conj(xi)^b] = a!` if `a == b`, else 0.
    pub fn complex_gaussian() -> Self {
        Self::from_mixed(MixedMoments::from_fn(|a, b| {
            if a == b {
                Complex64::new((1..=a).product::<usize>() as f64, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        }))
    }
}

/// Bounds required of every entry law: centered, `E|xi|^2 >= c2`, `E|xi|^4 <= c4`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct Admissibility {
    pub c2: f64,
    pub c4: f64,
}

impl Default for Admissibility {
    fn default() -> Self {
        Self { c2: 1.0, c4: 16.0 }
    }
}

impl Admissibility {
    pub fn check(&self, d: &EntryDistribution) -> Result<()> {
        let p = &d.profile;
        let fail = |reason: String| Err(Error::Inadmissible { name: d.name.clone(), reason });
        if p.mean.norm() > 1e-12 {
            return fail(format!("mean {} is not zero", p.mean));
        }
        if p.second_abs < self.c2 - 1e-12 {
            return fail(format!("E|xi|^2 = {} < c2 = {}", p.second_abs, self.c2));
        }
        if p.fourth_abs > self.c4 + 1e-12 {
            return fail(format!("E|xi|^4 = {} > C4 = {}", p.fourth_abs, self.c4));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum EntryLaw {
    /// Real and imaginary parts independent `N(0, 1/2)`.
    Ginibre,
    /// Real `+-1`.
    Rademacher,
    /// `(e1 + i e2) / sqrt 2` with independent signs.
    RademacherComplex,
    /// `0` w.p. 1/2, `sqrt 2 * omega` w.p. 1/16 for each eighth root of unity.
    GaussMatchDiscrete,
    /// Uniform on the disc of radius `sqrt 2` (unit second moment).
    UniformDisc,
    PointMass(Complex64),
    Atoms(Vec<(Complex64, f64)>),
    Symmetrized(Box<EntryLaw>),
}

impl EntryLaw {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        match self {
            EntryLaw::Ginibre => {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
            }
            EntryLaw::Rademacher => Complex64::new(if rng.gen::<bool>() { 1.0 } else { -1.0 }, 0.0),
            EntryLaw::RademacherComplex => {
                let re = if rng.gen::<bool>() { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
                let im = if rng.gen::<bool>() { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
                Complex64::new(re, im)
            }
            EntryLaw::GaussMatchDiscrete => {
                let u: u32 = rng.gen_range(0..16);
                if u < 8 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::from_polar(SQRT_2, (u - 8) as f64 * PI / 4.0)
                }
            }
            EntryLaw::UniformDisc => {
                let r = SQRT_2 * rng.gen::<f64>().sqrt();
                Complex64::from_polar(r, 2.0 * PI * rng.gen::<f64>())
            }
            EntryLaw::PointMass(c) => *c,
            EntryLaw::Atoms(atoms) => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for &(x, p) in atoms {
                    acc += p;
                    if u < acc {
                        return x;
                    }
                }
                atoms.last().map_or(Complex64::new(0.0, 0.0), |a| a.0)
            }
            EntryLaw::Symmetrized(inner) => inner.sample(rng) - inner.sample(rng),
        }
    }

    /// Atoms and probabilities for finitely supported laws.
    pub fn atoms(&self) -> Option<Vec<(Complex64, f64)>> {
        let h = FRAC_1_SQRT_2;
        match self {
            EntryLaw::Ginibre | EntryLaw::UniformDisc => None,
            EntryLaw::Rademacher => Some(vec![(Complex64::new(-1.0, 0.0), 0.5), (Complex64::new(1.0, 0.0), 0.5)]),
            EntryLaw::RademacherComplex => Some(
                [(h, h), (h, -h), (-h, h), (-h, -h)].iter().map(|&(a, b)| (Complex64::new(a, b), 0.25)).collect(),
            ),
            EntryLaw::GaussMatchDiscrete => {
                let mut atoms = vec![(Complex64::new(0.0, 0.0), 0.5)];
                atoms.extend((0..8).map(|k| (Complex64::from_polar(SQRT_2, k as f64 * PI / 4.0), 1.0 / 16.0)));
                Some(atoms)
            }
            EntryLaw::PointMass(c) => Some(vec![(*c, 1.0)]),
            EntryLaw::Atoms(a) => Some(a.clone()),
            EntryLaw::Symmetrized(inner) => {
                let base = inner.atoms()?;
                let mut out: Vec<(Complex64, f64)> = Vec::new();
                for &(x, p) in &base {
                    for &(y, q) in &base {
                        let d = x - y;
                        match out.iter_mut().find(|(v, _)| (v - d).norm() <= 1e-12) {
                            Some(slot) => slot.1 += p * q,
                            None => out.push((d, p * q)),
                        }
                    }
                }
                Some(out)
            }
        }
    }

    /// Exact mixed moments (closed forms or atom enumeration).
    pub fn mixed_moments(&self) -> MixedMoments {
        match self {
            EntryLaw::Ginibre => MomentProfile::complex_gaussian().mixed,
            EntryLaw::UniformDisc => MixedMoments::from_fn(|a, b| {
                // E|xi|^{2a} = R^{2a} / (a + 1) with R^2 = 2
                if a == b {
                    Complex64::new(2f64.powi(a as i32) / (a as f64 + 1.0), 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }),
            EntryLaw::Symmetrized(inner) => inner.mixed_moments().symmetrized(),
            other => MixedMoments::of_atoms(&other.atoms().expect("finitely supported")),
        }
    }
}

/// A named entry law together with its declared moment profile.
#[derive(Clone, PartialEq)]
pub struct EntryDistribution {
    pub name: String,
    pub law: EntryLaw,
    pub profile: MomentProfile,
}

impl fmt::Debug for EntryDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EntryDistribution")
            .field("name", &self.name)
            .field("second_abs", &self.profile.second_abs)
            .field("fourth_abs", &self.profile.fourth_abs)
            .finish()
    }
}

/// Names accepted by [`EntryDistribution::by_name`].
pub const DISTRIBUTION_NAMES: [&str; 5] =
    ["ginibre", "rademacher", "rademacher-complex", "gauss-match-discrete", "uniform-disc"];

impl EntryDistribution {
    pub fn new(name: impl Into<String>, law: EntryLaw) -> Self {
        let profile = MomentProfile::from_mixed(law.mixed_moments());
        Self { name: name.into(), law, profile }
    }

    /// Law with an explicitly declared (possibly wrong) profile; used for negative controls.
    pub fn with_declared_profile(name: impl Into<String>, law: EntryLaw, profile: MomentProfile) -> Self {
        Self { name: name.into(), law, profile }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        let law = match name {
            "ginibre" => EntryLaw::Ginibre,
            "rademacher" => EntryLaw::Rademacher,
            "rademacher-complex" => EntryLaw::RademacherComplex,
            "gauss-match-discrete" => EntryLaw::GaussMatchDiscrete,
            "uniform-disc" => EntryLaw::UniformDisc,
            _ => {
                return Err(Error::UnknownDistribution {
                    name: name.to_string(),
                    valid: DISTRIBUTION_NAMES.join(", "),
                })
            }
        };
        Ok(Self::new(name, law))
    }

    pub fn ginibre() -> Self {
        Self::new("ginibre", EntryLaw::Ginibre)
    }

    pub fn point_mass(c: Complex64) -> Self {
        Self::new(format!("point-mass({c})"), EntryLaw::PointMass(c))
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        self.law.sample(rng)
    }
}

/// The nine-atom law matching the standard complex Gaussian in all mixed moments of
/// total degree at most four.
pub fn gaussian_matching_discrete() -> EntryDistribution {
    EntryDistribution::new("gauss-match-discrete", EntryLaw::GaussMatchDiscrete)
}

/// Law of `xi - xi'` for independent copies; the profile is recomputed from the declared one.
pub fn symmetrize(d: &EntryDistribution) -> EntryDistribution {
    let profile = MomentProfile::from_mixed(d.profile.mixed.symmetrized());
    EntryDistribution {
        name: format!("sym({})", d.name),
        law: EntryLaw::Symmetrized(Box::new(d.law.clone())),
        profile,
    }
}
