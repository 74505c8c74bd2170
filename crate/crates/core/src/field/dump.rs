//! Flat little-endian binary layout of a [`FieldGrid`]:
//!
//! ```text
//! u64 ell, u64 n_theta, u64 n_phi
//! f64 weights[n_theta]
//! f64 values[n_theta * n_phi]
//! f64 grad1[n_theta * n_phi]
//! f64 grad2[n_theta * n_phi]
//! ```
//!
//! Matrices are row-major by colatitude. Colatitudes and longitudes are not
//! stored; they are the `n_theta`-point Gauss nodes and `j·(2π/n_phi)`.

use std::f64::consts::PI;
use std::io::{Read, Write};

use super::FieldGrid;
use crate::error::{Error, Result};
use crate::legendre::gauss_legendre;

impl FieldGrid {
    pub fn write_binary(&self, out: &mut impl Write) -> std::io::Result<()> {
        for h in [self.degree, self.n_theta(), self.n_phi()] {
            out.write_all(&(h as u64).to_le_bytes())?;
        }
        for block in [&self.weights, &self.values, &self.grad1, &self.grad2] {
            for v in block.iter() {
                out.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary(input: &mut impl Read) -> Result<FieldGrid> {
        let bad = |e: std::io::Error| Error::Serialization(format!("field dump: {e}"));
        let mut word = [0u8; 8];
        let mut header = [0usize; 3];
        for h in header.iter_mut() {
            input.read_exact(&mut word).map_err(bad)?;
            *h = u64::from_le_bytes(word) as usize;
        }
        let [degree, nt, np] = header;
        let mut read_block = |n: usize| -> Result<Vec<f64>> {
            (0..n)
                .map(|_| {
                    input.read_exact(&mut word).map_err(bad)?;
                    Ok(f64::from_le_bytes(word))
                })
                .collect()
        };
        let weights = read_block(nt)?;
        let values = read_block(nt * np)?;
        let grad1 = read_block(nt * np)?;
        let grad2 = read_block(nt * np)?;
        let dphi = 2.0 * PI / np as f64;
        Ok(FieldGrid {
            degree,
            thetas: gauss_legendre(nt).thetas,
            phis: (0..np).map(|j| j as f64 * dphi).collect(),
            values,
            grad1,
            grad2,
            weights,
            seed: 0,
        })
    }
}

#[cfg(test)]
mod tests {
    use crate::field::{sample_for_stream, synthesize, FieldGrid, StreamKey};

    #[test]
    fn layout_and_round_trip() {
        let c = sample_for_stream(StreamKey::new(3, 5, 0)).unwrap();
        let grid = synthesize(&c, 2).unwrap();
        let mut buf = Vec::new();
        grid.write_binary(&mut buf).unwrap();
        let (nt, np) = (grid.n_theta(), grid.n_phi());
        assert_eq!(buf.len(), 8 * (3 + nt + 3 * nt * np));
        assert_eq!(u64::from_le_bytes(buf[0..8].try_into().unwrap()), 5);
        assert_eq!(
            u64::from_le_bytes(buf[8..16].try_into().unwrap()),
            nt as u64
        );
        let back = FieldGrid::read_binary(&mut buf.as_slice()).unwrap();
        assert_eq!(back.values, grid.values);
        assert_eq!(back.grad2, grid.grad2);
        assert_eq!(back.weights, grid.weights);
        assert_eq!(back.thetas, grid.thetas);
    }

    #[test]
    fn truncated_input_is_an_error() {
        let buf = [0u8; 12];
        assert!(FieldGrid::read_binary(&mut buf.as_slice()).is_err());
    }
}
