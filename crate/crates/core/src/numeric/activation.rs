use serde::{Deserialize, Serialize};

use crate::Real;

pub const DEFAULT_LEAKY_SLOPE: f64 = 0.01;

#[inline]
pub fn leaky_relu<T: Real>(x: T, slope: T) -> T {
    if x >= T::zero() {
        x
    } else {
        slope * x
    }
}

/// Derivative of [`leaky_relu`]; the kink at 0 takes the positive branch.
#[inline]
pub fn leaky_relu_grad<T: Real>(x: T, slope: T) -> T {
    if x >= T::zero() {
        T::one()
    } else {
        slope
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    LeakyRelu { slope: f64 },
    Identity,
}

impl Activation {
    pub fn leaky(slope: f64) -> Self {
        Activation::LeakyRelu { slope }
    }

    #[inline]
    pub fn apply<T: Real>(self, x: T) -> T {
        match self {
            Activation::LeakyRelu { slope } => leaky_relu(x, T::of(slope)),
            Activation::Identity => x,
        }
    }

    #[inline]
    pub fn derivative<T: Real>(self, x: T) -> T {
        match self {
            Activation::LeakyRelu { slope } => leaky_relu_grad(x, T::of(slope)),
            Activation::Identity => T::one(),
        }
    }

    pub fn validate(self) -> crate::Result<()> {
        match self {
            Activation::LeakyRelu { slope } if !(slope > 0.0 && slope < 1.0) => Err(
                crate::Error::InvalidArgument(format!("leaky relu slope {slope} outside (0, 1)")),
            ),
            _ => Ok(()),
        }
    }
}
