//! The four experiment presets: networks A–D with their training defaults.

use std::fmt;
use std::str::FromStr;

use szlab_core::{NetworkSpec, Optimizer, Regime, WindowSpec};

use crate::error::{Error, Result};

pub const DEFAULT_HIDDEN: usize = 512;
pub const BATCH_SIZE: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Preset {
    /// Network A on MNIST, developmental.
    ADev,
    /// Network B on MNIST, disorganized.
    BDis,
    /// Network C on CIFAR-10, developmental.
    CDev,
    /// Network D on CIFAR-10, disorganized.
    DDis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataKind {
    Mnist,
    Cifar10,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::ADev, Preset::BDis, Preset::CDev, Preset::DDis];

    pub fn id(self) -> &'static str {
        match self {
            Preset::ADev => "a-dev",
            Preset::BDis => "b-dis",
            Preset::CDev => "c-dev",
            Preset::DDis => "d-dis",
        }
    }

    pub fn regime(self) -> Regime {
        match self {
            Preset::ADev | Preset::CDev => Regime::Developmental,
            Preset::BDis | Preset::DDis => Regime::Disorganized,
        }
    }

    pub fn data(self) -> DataKind {
        match self {
            Preset::ADev | Preset::BDis => DataKind::Mnist,
            Preset::CDev | Preset::DDis => DataKind::Cifar10,
        }
    }

    /// Adam (lr 1e-3) for the MNIST nets, RMSprop (lr 1e-4, decay 1e-6) for CIFAR-10.
    pub fn optimizer(self) -> Optimizer {
        match self.data() {
            DataKind::Mnist => Optimizer::adam(1e-3),
            DataKind::Cifar10 => Optimizer::rmsprop(1e-4, 1e-6),
        }
    }

    pub fn default_epochs(self) -> usize {
        match self {
            Preset::ADev => 10,
            Preset::BDis => 20,
            Preset::CDev => 50,
            Preset::DDis => 100,
        }
    }

    pub fn default_sessions(self) -> usize {
        match self {
            Preset::ADev | Preset::BDis => 100,
            Preset::CDev => 10,
            Preset::DDis => 30,
        }
    }

    /// Network for this preset. `hidden` only applies to b-dis, `l1` only to c-dev.
    pub fn network(self, hidden: usize, window: Option<WindowSpec>, l1: Option<f64>) -> Result<NetworkSpec> {
        if l1.is_some() && self != Preset::CDev {
            return Err(Error::Invalid("--l1 applies to the c-dev preset only".into()));
        }
        if hidden == 0 {
            return Err(Error::Invalid("--hidden must be at least 1".into()));
        }
        Ok(match self {
            Preset::ADev => NetworkSpec::network_a(window),
            Preset::BDis => NetworkSpec::network_b(hidden, window),
            Preset::CDev => NetworkSpec::network_c(window, l1),
            Preset::DDis => NetworkSpec::network_d(window),
        })
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.id() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown preset {s:?} (expected a-dev, b-dis, c-dev or d-dis)")))
    }
}
