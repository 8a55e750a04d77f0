//! Three-dimensional resource vectors (CPU, memory, bandwidth).
//!
//! Quantities are fixed-point integers so that capacity bookkeeping is exact:
//! CPU in MIPS, memory in megabytes (1 GB = 1000 MB) and bandwidth in bps.

use std::fmt;
use std::iter::Sum;
use std::ops::Add;

use serde::{Deserialize, Serialize};

/// Megabytes per gigabyte used by the memory component.
pub const MB_PER_GB: u64 = 1000;

/// One of the three resource dimensions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Resource {
    Cpu,
    Mem,
    Bw,
}

impl Resource {
    pub const ALL: [Resource; 3] = [Resource::Cpu, Resource::Mem, Resource::Bw];
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ResourceVector {
    /// Processing capacity in MIPS.
    pub cpu: u64,
    /// Memory in MB.
    pub mem: u64,
    /// Bandwidth in bps.
    pub bw: u64,
}

impl ResourceVector {
    pub const ZERO: ResourceVector = ResourceVector { cpu: 0, mem: 0, bw: 0 };

    pub const fn new(cpu: u64, mem_mb: u64, bw: u64) -> Self {
        Self { cpu, mem: mem_mb, bw }
    }

    /// Build from whole gigabytes of memory, the unit the machine catalog uses.
    pub const fn with_gb(cpu: u64, mem_gb: u64, bw: u64) -> Self {
        Self { cpu, mem: mem_gb * MB_PER_GB, bw }
    }

    /// Build from real-valued quantities, rounding to the fixed-point grid.
    /// Returns `None` for negative or non-finite input.
    pub fn from_real(cpu_mips: f64, mem_gb: f64, bw_bps: f64) -> Option<Self> {
        let conv = |v: f64| (v.is_finite() && v >= 0.0).then(|| v.round() as u64);
        Some(Self {
            cpu: conv(cpu_mips)?,
            mem: conv(mem_gb * MB_PER_GB as f64)?,
            bw: conv(bw_bps)?,
        })
    }

    pub fn mem_gb(&self) -> f64 {
        self.mem as f64 / MB_PER_GB as f64
    }

    pub fn get(&self, r: Resource) -> u64 {
        match r {
            Resource::Cpu => self.cpu,
            Resource::Mem => self.mem,
            Resource::Bw => self.bw,
        }
    }

    pub fn set(&mut self, r: Resource, v: u64) {
        match r {
            Resource::Cpu => self.cpu = v,
            Resource::Mem => self.mem = v,
            Resource::Bw => self.bw = v,
        }
    }

    /// Component-wise `self <= other`.
    pub fn fits_within(&self, other: &ResourceVector) -> bool {
        self.cpu <= other.cpu && self.mem <= other.mem && self.bw <= other.bw
    }

    /// Resources along which `self` exceeds `other`.
    pub fn exceeded(&self, other: &ResourceVector) -> Vec<Resource> {
        Resource::ALL
            .into_iter()
            .filter(|&r| self.get(r) > other.get(r))
            .collect()
    }

    /// Component-wise subtraction; `None` if any component would go negative.
    pub fn checked_sub(&self, other: &ResourceVector) -> Option<ResourceVector> {
        Some(ResourceVector {
            cpu: self.cpu.checked_sub(other.cpu)?,
            mem: self.mem.checked_sub(other.mem)?,
            bw: self.bw.checked_sub(other.bw)?,
        })
    }

    pub fn checked_add(&self, other: &ResourceVector) -> Option<ResourceVector> {
        Some(ResourceVector {
            cpu: self.cpu.checked_add(other.cpu)?,
            mem: self.mem.checked_add(other.mem)?,
            bw: self.bw.checked_add(other.bw)?,
        })
    }

    pub fn saturating_sub(&self, other: &ResourceVector) -> ResourceVector {
        ResourceVector {
            cpu: self.cpu.saturating_sub(other.cpu),
            mem: self.mem.saturating_sub(other.mem),
            bw: self.bw.saturating_sub(other.bw),
        }
    }

    pub fn scale(&self, k: u64) -> ResourceVector {
        ResourceVector {
            cpu: self.cpu * k,
            mem: self.mem * k,
            bw: self.bw * k,
        }
    }

    pub fn is_zero(&self) -> bool {
        *self == Self::ZERO
    }

    /// Sum of the components, each divided by the matching component of
    /// `norm`. Zero-valued normalisers contribute nothing.
    pub fn normalized_sum(&self, norm: &ResourceVector) -> f64 {
        Resource::ALL
            .into_iter()
            .filter(|&r| norm.get(r) > 0)
            .map(|r| self.get(r) as f64 / norm.get(r) as f64)
            .sum()
    }

    /// Component-wise maximum.
    pub fn max(&self, other: &ResourceVector) -> ResourceVector {
        ResourceVector {
            cpu: self.cpu.max(other.cpu),
            mem: self.mem.max(other.mem),
            bw: self.bw.max(other.bw),
        }
    }
}

impl Add for ResourceVector {
    type Output = ResourceVector;

    fn add(self, rhs: ResourceVector) -> ResourceVector {
        self.checked_add(&rhs).expect("resource vector overflow")
    }
}

impl Sum for ResourceVector {
    fn sum<I: Iterator<Item = ResourceVector>>(iter: I) -> Self {
        iter.fold(ResourceVector::ZERO, |a, b| a + b)
    }
}

impl<'a> Sum<&'a ResourceVector> for ResourceVector {
    fn sum<I: Iterator<Item = &'a ResourceVector>>(iter: I) -> Self {
        iter.copied().sum()
    }
}

impl fmt::Display for ResourceVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({} MIPS, {} GB, {} bps)",
            self.cpu,
            self.mem_gb(),
            self.bw
        )
    }
}
