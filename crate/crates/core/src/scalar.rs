//! Floating-point abstraction shared by the topic-model math.
//!
//! Everything numeric in [`crate::topics`] is generic over [`Scalar`] so the
//! same code runs in `f64` (the reference precision used by the pipeline) and
//! `f32` (half the memory for large vocabularies).

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Send
    + Sync
    + Debug
    + Display
    + Default
    + FromStr
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Name written into binary array headers.
    const DTYPE: &'static str;
    /// Width in bytes of one little-endian element.
    const BYTES: usize;

    fn write_le(self, out: &mut Vec<u8>);
    fn read_le(bytes: &[u8]) -> Self;

    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }
}

macro_rules! impl_scalar {
    ($t:ty, $name:expr) => {
        impl Scalar for $t {
            const DTYPE: &'static str = $name;
            const BYTES: usize = std::mem::size_of::<$t>();

            #[inline]
            fn write_le(self, out: &mut Vec<u8>) {
                out.extend_from_slice(&self.to_le_bytes());
            }

            #[inline]
            fn read_le(bytes: &[u8]) -> Self {
                let mut buf = [0u8; std::mem::size_of::<$t>()];
                buf.copy_from_slice(&bytes[..std::mem::size_of::<$t>()]);
                <$t>::from_le_bytes(buf)
            }
        }
    };
}

impl_scalar!(f32, "f32");
impl_scalar!(f64, "f64");
