use core::fmt;
use core::ops::{Add, AddAssign, Index, IndexMut, Mul, Sub, SubAssign};

/// One of the four resource dimensions tracked per replica.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Resource {
    Cpu,
    Memory,
    Storage,
    Network,
}

impl Resource {
    pub const ALL: [Resource; 4] = [
        Resource::Cpu,
        Resource::Memory,
        Resource::Storage,
        Resource::Network,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Resource::Cpu => "cpu",
            Resource::Memory => "memory",
            Resource::Storage => "storage",
            Resource::Network => "network",
        }
    }

    pub fn from_name(name: &str) -> Option<Resource> {
        Resource::ALL.into_iter().find(|r| r.name() == name)
    }
}

impl fmt::Display for Resource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A quantity of (cpu, memory, storage, network).
///
/// Used for capacities, per-request demands and current usage. Ordering is
/// component-wise, see [`ResourceVector::fits_within`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ResourceVector {
    pub cpu: f64,
    pub memory: f64,
    pub storage: f64,
    pub network: f64,
}

impl ResourceVector {
    pub const ZERO: ResourceVector = ResourceVector::new(0.0, 0.0, 0.0, 0.0);

    pub const fn new(cpu: f64, memory: f64, storage: f64, network: f64) -> Self {
        Self {
            cpu,
            memory,
            storage,
            network,
        }
    }

    pub const fn splat(v: f64) -> Self {
        Self::new(v, v, v, v)
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.cpu, self.memory, self.storage, self.network]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    /// Finite and non-negative in every component.
    pub fn is_valid(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite() && *v >= 0.0)
    }

    /// `self <= other` in every component.
    pub fn fits_within(&self, other: &ResourceVector) -> bool {
        self.cpu <= other.cpu
            && self.memory <= other.memory
            && self.storage <= other.storage
            && self.network <= other.network
    }

    pub fn map(self, f: impl Fn(f64) -> f64) -> Self {
        let [a, b, c, d] = self.to_array();
        Self::new(f(a), f(b), f(c), f(d))
    }

    pub fn zip_with(self, other: Self, f: impl Fn(f64, f64) -> f64) -> Self {
        Self::new(
            f(self.cpu, other.cpu),
            f(self.memory, other.memory),
            f(self.storage, other.storage),
            f(self.network, other.network),
        )
    }

    /// Component-wise `self / other`, with `x / 0` read as 0.
    pub fn ratio(self, other: Self) -> Self {
        self.zip_with(other, |a, b| if b > 0.0 { a / b } else { 0.0 })
    }

    pub fn max(self, other: Self) -> Self {
        self.zip_with(other, f64::max)
    }

    pub fn mean(&self) -> f64 {
        (self.cpu + self.memory + self.storage + self.network) / 4.0
    }
}

impl Index<Resource> for ResourceVector {
    type Output = f64;

    fn index(&self, r: Resource) -> &f64 {
        match r {
            Resource::Cpu => &self.cpu,
            Resource::Memory => &self.memory,
            Resource::Storage => &self.storage,
            Resource::Network => &self.network,
        }
    }
}

impl IndexMut<Resource> for ResourceVector {
    fn index_mut(&mut self, r: Resource) -> &mut f64 {
        match r {
            Resource::Cpu => &mut self.cpu,
            Resource::Memory => &mut self.memory,
            Resource::Storage => &mut self.storage,
            Resource::Network => &mut self.network,
        }
    }
}

impl Add for ResourceVector {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl AddAssign for ResourceVector {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl Sub for ResourceVector {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl SubAssign for ResourceVector {
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

impl Mul<f64> for ResourceVector {
    type Output = Self;
    fn mul(self, k: f64) -> Self {
        self.map(|v| v * k)
    }
}
