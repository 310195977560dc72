//! Finitely supported functions on the vertex set, the domain the formal
//! operators act on. Keys are internal vertex indices of a host graph.

use std::collections::BTreeMap;

use num_complex::Complex64;

/// Finitely supported complex amplitudes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Amplitudes {
    values: BTreeMap<usize, Complex64>,
}

/// Finitely supported real function (cut-offs and P's multiplier slot).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RealAmplitudes {
    values: BTreeMap<usize, f64>,
}

impl Amplitudes {
    pub fn new() -> Self {
        Self::default()
    }

    /// The Kronecker delta at one vertex.
    pub fn delta(idx: usize) -> Self {
        let mut values = BTreeMap::new();
        values.insert(idx, Complex64::new(1.0, 0.0));
        Self { values }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, Complex64)>) -> Self {
        let mut values = BTreeMap::new();
        for (k, v) in pairs {
            if v != Complex64::ZERO {
                values.insert(k, v);
            }
        }
        Self { values }
    }

    pub fn set(&mut self, idx: usize, value: Complex64) {
        if value == Complex64::ZERO {
            self.values.remove(&idx);
        } else {
            self.values.insert(idx, value);
        }
    }

    pub fn get(&self, idx: usize) -> Complex64 {
        self.values.get(&idx).copied().unwrap_or(Complex64::ZERO)
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.values.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        self.values.iter().map(|(&k, &v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.values().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Pointwise product with a real function (zero off its support).
    pub fn mul_real(&self, psi: &RealAmplitudes) -> Amplitudes {
        Amplitudes::from_pairs(self.iter().map(|(k, v)| (k, v * psi.get(k))))
    }

    pub fn scaled(&self, c: Complex64) -> Amplitudes {
        Amplitudes::from_pairs(self.iter().map(|(k, v)| (k, v * c)))
    }

    /// self + c * other.
    pub fn add_scaled(&self, c: Complex64, other: &Amplitudes) -> Amplitudes {
        let mut values = self.values.clone();
        for (k, v) in other.iter() {
            let entry = values.entry(k).or_insert(Complex64::ZERO);
            *entry += c * v;
            if *entry == Complex64::ZERO {
                values.remove(&k);
            }
        }
        Self { values }
    }

    pub fn sub(&self, other: &Amplitudes) -> Amplitudes {
        self.add_scaled(Complex64::new(-1.0, 0.0), other)
    }
}

impl RealAmplitudes {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut values = BTreeMap::new();
        for (k, v) in pairs {
            if v != 0.0 {
                values.insert(k, v);
            }
        }
        Self { values }
    }

    pub fn set(&mut self, idx: usize, value: f64) {
        if value == 0.0 {
            self.values.remove(&idx);
        } else {
            self.values.insert(idx, value);
        }
    }

    pub fn get(&self, idx: usize) -> f64 {
        self.values.get(&idx).copied().unwrap_or(0.0)
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.values.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values.iter().map(|(&k, &v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// View as complex amplitudes.
    pub fn to_complex(&self) -> Amplitudes {
        Amplitudes::from_pairs(self.iter().map(|(k, v)| (k, Complex64::new(v, 0.0))))
    }
}
