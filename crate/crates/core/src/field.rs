//! Sampling grids, complex scalar fields and the CF64 exchange format.
//!
//! Every field lives on a [`GridSpec`]: a uniform lattice centered on the
//! optical axis. Sample `(i, j)` sits at `((i - nx/2)·dx, (j - ny/2)·dy)`
//! (integer division), so for even sizes the origin is sample `nx/2`, the
//! same bin a centered DFT uses for zero frequency. Samples are stored
//! row-major: `data[j * nx + i]`, with `j` along `y`.
//!
//! All lengths are meters.

use std::io::{BufRead, Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default optical wavelength, 1080 nm.
pub const DEFAULT_WAVELENGTH: f64 = 1080e-9;

const PITCH_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    nx: usize,
    ny: usize,
    dx: f64,
    dy: f64,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, dx: f64, dy: f64) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidGrid(format!(
                "sample counts must be at least 2, got {nx}x{ny}"
            )));
        }
        if !(dx > 0.0 && dx.is_finite() && dy > 0.0 && dy.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "pitch must be positive and finite, got ({dx}, {dy})"
            )));
        }
        Ok(Self { nx, ny, dx, dy })
    }

    /// Square `n × n` grid with isotropic pitch.
    pub fn square(n: usize, pitch: f64) -> Result<Self> {
        Self::new(n, n, pitch, pitch)
    }

    /// Square grid with `n` samples spanning `extent` meters per side.
    pub fn with_extent(n: usize, extent: f64) -> Result<Self> {
        Self::square(n, extent / n as f64)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dy(&self) -> f64 {
        self.dy
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Area element `dx·dy`.
    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    /// Physical extent `(nx·dx, ny·dy)`.
    pub fn extent(&self) -> (f64, f64) {
        (self.nx as f64 * self.dx, self.ny as f64 * self.dy)
    }

    pub fn x(&self, i: usize) -> f64 {
        (i as f64 - (self.nx / 2) as f64) * self.dx
    }

    pub fn y(&self, j: usize) -> f64 {
        (j as f64 - (self.ny / 2) as f64) * self.dy
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// Same shape, pitches equal to within a relative 1e-9.
    pub fn is_compatible(&self, other: &GridSpec) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && close(self.dx, other.dx)
            && close(self.dy, other.dy)
    }

    pub fn same_pitch(&self, other: &GridSpec) -> bool {
        close(self.dx, other.dx) && close(self.dy, other.dy)
    }

    pub(crate) fn ensure_compatible(&self, other: &GridSpec) -> Result<()> {
        if self.is_compatible(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self} vs {other}")))
        }
    }
}

impl std::fmt::Display for GridSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}x{} @ ({:e} m, {:e} m)",
            self.nx, self.ny, self.dx, self.dy
        )
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= PITCH_RTOL * a.abs().max(b.abs())
}

/// A complex scalar field sampled on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: GridSpec,
    wavelength: f64,
    data: Vec<Complex64>,
}

impl ComplexField {
    pub fn zeros(grid: GridSpec, wavelength: f64) -> Self {
        Self {
            grid,
            wavelength,
            data: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_vec(grid: GridSpec, wavelength: f64, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} samples supplied for a {grid} grid",
                data.len()
            )));
        }
        Ok(Self {
            grid,
            wavelength,
            data,
        })
    }

    /// Samples `f(x, y)` at every grid point.
    pub fn from_fn(
        grid: GridSpec,
        wavelength: f64,
        mut f: impl FnMut(f64, f64) -> Complex64,
    ) -> Self {
        let mut data = Vec::with_capacity(grid.len());
        for j in 0..grid.ny() {
            let y = grid.y(j);
            for i in 0..grid.nx() {
                data.push(f(grid.x(i), y));
            }
        }
        Self {
            grid,
            wavelength,
            data,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[self.grid.index(i, j)]
    }

    /// Same samples on a different lattice.
    pub(crate) fn with_grid(self, grid: GridSpec) -> Self {
        debug_assert_eq!(grid.len(), self.data.len());
        Self { grid, ..self }
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            grid: self.grid,
            wavelength: self.wavelength,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    /// Like [`map`](Self::map) but also passes the flat sample index.
    pub fn map_indexed(&self, f: impl Fn(usize, Complex64) -> Complex64) -> Self {
        Self {
            grid: self.grid,
            wavelength: self.wavelength,
            data: self
                .data
                .iter()
                .enumerate()
                .map(|(k, &z)| f(k, z))
                .collect(),
        }
    }

    pub fn scale(&self, k: Complex64) -> Self {
        self.map(|z| z * k)
    }

    /// Sample-wise `a + b`.
    pub fn add(&self, other: &ComplexField) -> Result<Self> {
        self.grid.ensure_compatible(&other.grid)?;
        Ok(Self {
            grid: self.grid,
            wavelength: self.wavelength,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn power(&self) -> f64 {
        power(self)
    }

    pub fn intensity(&self) -> RealField {
        RealField {
            grid: self.grid,
            data: self.data.iter().map(|z| z.norm_sqr()).collect(),
        }
    }

    pub fn amplitude(&self) -> RealField {
        RealField {
            grid: self.grid,
            data: self.data.iter().map(|z| z.norm()).collect(),
        }
    }

    pub fn phase(&self) -> RealField {
        RealField {
            grid: self.grid,
            data: self.data.iter().map(|z| z.arg()).collect(),
        }
    }

    /// Writes the CF64 representation.
    pub fn write_cf64(&self, mut w: impl Write) -> Result<()> {
        writeln!(
            w,
            "CF64 {} {} {} {} {}",
            self.grid.nx, self.grid.ny, self.grid.dx, self.grid.dy, self.wavelength
        )?;
        let mut buf = Vec::with_capacity(self.data.len() * 16);
        for z in &self.data {
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_cf64(r: impl Read) -> Result<Self> {
        let mut r = std::io::BufReader::new(r);
        let mut header = Vec::new();
        r.read_until(b'\n', &mut header)?;
        if header.last() != Some(&b'\n') {
            return Err(Error::FieldFormat("missing header line".into()));
        }
        let header = std::str::from_utf8(&header[..header.len() - 1])
            .map_err(|_| Error::FieldFormat("header is not ASCII".into()))?;
        let tokens: Vec<&str> = header.split(' ').collect();
        if tokens.len() != 6 || tokens[0] != "CF64" {
            return Err(Error::FieldFormat(format!("bad header {header:?}")));
        }
        let nx: usize = parse_token(tokens[1])?;
        let ny: usize = parse_token(tokens[2])?;
        let dx: f64 = parse_token(tokens[3])?;
        let dy: f64 = parse_token(tokens[4])?;
        let wavelength: f64 = parse_token(tokens[5])?;
        let grid = GridSpec::new(nx, ny, dx, dy)
            .map_err(|e| Error::FieldFormat(format!("header grid: {e}")))?;
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() != grid.len() * 16 {
            return Err(Error::FieldFormat(format!(
                "expected {} payload bytes, found {}",
                grid.len() * 16,
                bytes.len()
            )));
        }
        let data = bytes
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().unwrap());
                let im = f64::from_le_bytes(c[8..].try_into().unwrap());
                Complex64::new(re, im)
            })
            .collect();
        Ok(Self {
            grid,
            wavelength,
            data,
        })
    }

    pub fn save_cf64(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_cf64(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load_cf64(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::read_cf64(std::fs::File::open(path)?)
    }
}

fn parse_token<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::FieldFormat(format!("cannot parse header token {s:?}")))
}

/// A real-valued map (intensity, phase, amplitude) on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: GridSpec,
    data: Vec<f64>,
}

impl RealField {
    pub fn from_vec(grid: GridSpec, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} samples supplied for a {grid} grid",
                data.len()
            )));
        }
        Ok(Self { grid, data })
    }

    pub fn from_fn(grid: GridSpec, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut data = Vec::with_capacity(grid.len());
        for j in 0..grid.ny() {
            let y = grid.y(j);
            for i in 0..grid.nx() {
                data.push(f(grid.x(i), y));
            }
        }
        Self { grid, data }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.grid.index(i, j)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

/// Discrete `⟨a|b⟩ = Σ conj(a)·b·dx·dy`.
pub fn inner_product(a: &ComplexField, b: &ComplexField) -> Result<Complex64> {
    a.grid.ensure_compatible(&b.grid)?;
    let sum: Complex64 = a.data.iter().zip(&b.data).map(|(x, y)| x.conj() * y).sum();
    Ok(sum * a.grid.cell_area())
}

/// `Σ |a|²·dx·dy`.
pub fn power(a: &ComplexField) -> f64 {
    a.data.iter().map(|z| z.norm_sqr()).sum::<f64>() * a.grid.cell_area()
}

/// Rescales to unit power, leaving the phase untouched.
pub fn normalize(a: &ComplexField) -> Result<ComplexField> {
    let p = power(a);
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::ZeroField);
    }
    let k = 1.0 / p.sqrt();
    Ok(a.map(|z| z * k))
}

/// Centered copy of `a` on `target`, zero-filled where the source has no
/// samples. Returns the field and the fraction of source power discarded.
pub fn crop_or_pad(a: &ComplexField, target: &GridSpec) -> Result<(ComplexField, f64)> {
    if !a.grid.same_pitch(target) {
        return Err(Error::GridMismatch(format!(
            "crop/pad requires equal pitch: {} vs {target}",
            a.grid
        )));
    }
    let src = a.grid;
    let off_x = (src.nx() / 2) as isize - (target.nx() / 2) as isize;
    let off_y = (src.ny() / 2) as isize - (target.ny() / 2) as isize;
    let mut out = ComplexField::zeros(*target, a.wavelength);
    let mut kept = 0.0;
    for j in 0..target.ny() {
        let sj = j as isize + off_y;
        if sj < 0 || sj >= src.ny() as isize {
            continue;
        }
        for i in 0..target.nx() {
            let si = i as isize + off_x;
            if si < 0 || si >= src.nx() as isize {
                continue;
            }
            let z = a.get(si as usize, sj as usize);
            kept += z.norm_sqr();
            out.data[target.index(i, j)] = z;
        }
    }
    let total: f64 = a.data.iter().map(|z| z.norm_sqr()).sum();
    let discarded = if total > 0.0 {
        ((total - kept) / total).max(0.0)
    } else {
        0.0
    };
    Ok((out, discarded))
}
