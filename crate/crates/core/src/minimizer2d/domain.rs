use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::path::fmt17;
use crate::potential::{DihedralElement, PlanePoint};

/// The strip `|x1| <= mu R`, `|x2| <= R` with grid spacing `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripDomain {
    /// Half-height `R`.
    pub r_half: f64,
    pub mu: f64,
    /// Constraint onset: `C±` are the columns with `±x1 >= eta R`.
    pub eta: f64,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
}

fn grid_count(len: f64, h: f64, what: &str) -> Result<usize> {
    let k = len / h;
    if (k - k.round()).abs() > 1e-9 * k.max(1.0) || k.round() < 1.0 {
        return Err(Error::InvalidDomain(format!(
            "{what} = {len} is not a multiple of h = {h}"
        )));
    }
    Ok(k.round() as usize)
}

impl StripDomain {
    pub fn new(r_half: f64, mu: f64, eta: f64, h: f64) -> Result<Self> {
        if !(r_half > 0.0 && h > 0.0 && r_half.is_finite() && h.is_finite()) {
            return Err(Error::InvalidDomain(format!(
                "need R > 0 and h > 0, got R = {r_half}, h = {h}"
            )));
        }
        if !(eta > 0.5 && eta < mu) {
            return Err(Error::InvalidDomain(format!(
                "need 1/2 < eta < mu, got eta = {eta}, mu = {mu}"
            )));
        }
        let kx = grid_count(mu * r_half, h, "mu R")?;
        let ky = grid_count(r_half, h, "R")?;
        Ok(Self {
            r_half,
            mu,
            eta,
            h,
            nx: 2 * kx + 1,
            ny: 2 * ky + 1,
        })
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn x1(&self, i: usize) -> f64 {
        (i as f64 - self.ic() as f64) * self.h
    }

    pub fn x2(&self, j: usize) -> f64 {
        (j as f64 - self.jc() as f64) * self.h
    }

    /// Column of `x1 = 0`.
    pub fn ic(&self) -> usize {
        (self.nx - 1) / 2
    }

    /// Row of `x2 = 0`.
    pub fn jc(&self) -> usize {
        (self.ny - 1) / 2
    }

    pub fn half_width(&self) -> f64 {
        self.mu * self.r_half
    }

    /// `+1` on `C+`, `-1` on `C-`, `0` elsewhere.
    pub fn constraint_side(&self, i: usize) -> i8 {
        let x = self.x1(i);
        let onset = self.eta * self.r_half - 1e-9 * self.h;
        if x >= onset {
            1
        } else if x <= -onset {
            -1
        } else {
            0
        }
    }

    /// Grid image of node `(i, j)` under `g`.
    pub fn image(&self, g: DihedralElement, i: usize, j: usize) -> (usize, usize) {
        let fi = self.nx - 1 - i;
        let fj = self.ny - 1 - j;
        match g {
            DihedralElement::Identity => (i, j),
            DihedralElement::T1 => (fi, j),
            DihedralElement::T2 => (i, fj),
            DihedralElement::S => (fi, fj),
        }
    }
}

/// Nodal values on a strip together with the constraint radius `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field2D {
    pub domain: StripDomain,
    pub values: Vec<PlanePoint>,
    pub constraint_r: f64,
}

pub const EQUIVARIANCE_INPUT_TOL: f64 = 1e-8;

impl Field2D {
    pub fn from_fn<F: Fn(f64, f64) -> PlanePoint>(
        domain: StripDomain,
        constraint_r: f64,
        f: F,
    ) -> Self {
        let mut values = Vec::with_capacity(domain.len());
        for j in 0..domain.ny {
            for i in 0..domain.nx {
                values.push(f(domain.x1(i), domain.x2(j)));
            }
        }
        Self {
            domain,
            values,
            constraint_r,
        }
    }

    pub fn at(&self, i: usize, j: usize) -> PlanePoint {
        self.values[self.domain.index(i, j)]
    }

    pub fn row(&self, j: usize) -> &[PlanePoint] {
        let nx = self.domain.nx;
        &self.values[j * nx..(j + 1) * nx]
    }

    /// `max |u(g x) - g u(x)|` over nodes and group elements.
    pub fn equivariance_error(&self) -> f64 {
        let d = &self.domain;
        let mut worst = 0.0f64;
        for j in 0..d.ny {
            for i in 0..d.nx {
                let u = self.at(i, j);
                for g in DihedralElement::ALL {
                    let (gi, gj) = d.image(g, i, j);
                    worst = worst.max(self.at(gi, gj).distance(g.apply(u)));
                }
            }
        }
        worst
    }

    pub fn require_equivariant(&self) -> Result<()> {
        let deviation = self.equivariance_error();
        if deviation > EQUIVARIANCE_INPUT_TOL || !deviation.is_finite() {
            return Err(Error::NotEquivariant { deviation });
        }
        Ok(())
    }

    /// Rebuilds the field from its values on the quadrant `x1 >= 0, x2 >= 0`
    /// so that `u(g x) = g u(x)` holds exactly. Components that the symmetry
    /// forces to vanish on the axes are set to zero.
    pub fn extend_from_quadrant(&mut self) {
        let d = self.domain;
        let (ic, jc) = (d.ic(), d.jc());
        for j in jc..d.ny {
            for i in ic..d.nx {
                let k = d.index(i, j);
                let mut u = self.values[k];
                if i == ic {
                    u.u1 = 0.0;
                }
                if j == jc {
                    u.u2 = 0.0;
                }
                self.values[k] = u;
                for g in [DihedralElement::T1, DihedralElement::T2, DihedralElement::S] {
                    let (gi, gj) = d.image(g, i, j);
                    self.values[d.index(gi, gj)] = g.apply(u);
                }
            }
        }
    }

    /// CSV with header `x1,x2,u1,u2`, row-major in `x2`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let d = &self.domain;
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["x1", "x2", "u1", "u2"])?;
        for j in 0..d.ny {
            for i in 0..d.nx {
                let u = self.at(i, j);
                wr.write_record([fmt17(d.x1(i)), fmt17(d.x2(j)), fmt17(u.u1), fmt17(u.u2)])?;
            }
        }
        wr.flush()?;
        Ok(())
    }

    /// Reads values written by [`Field2D::write_csv`] for a known domain.
    pub fn read_csv<R: Read>(r: R, domain: StripDomain, constraint_r: f64) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let headers = rd.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["x1", "x2", "u1", "u2"] {
            return Err(Error::InvalidDomain(format!(
                "unexpected header {headers:?}"
            )));
        }
        let mut values = Vec::with_capacity(domain.len());
        for (k, rec) in rd.records().enumerate() {
            let rec = rec?;
            let parse = |c: usize| -> Result<f64> {
                rec[c]
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidDomain(format!("bad number {:?}: {e}", &rec[c])))
            };
            let (i, j) = (k % domain.nx, k / domain.nx);
            if j >= domain.ny {
                return Err(Error::InvalidDomain("more rows than grid nodes".into()));
            }
            let (x1, x2) = (parse(0)?, parse(1)?);
            if (x1 - domain.x1(i)).abs() > 1e-9 || (x2 - domain.x2(j)).abs() > 1e-9 {
                return Err(Error::InvalidDomain(format!(
                    "row {k} at ({x1}, {x2}) is off the grid"
                )));
            }
            values.push(PlanePoint::new(parse(2)?, parse(3)?));
        }
        if values.len() != domain.len() {
            return Err(Error::InvalidDomain(format!(
                "expected {} rows, found {}",
                domain.len(),
                values.len()
            )));
        }
        Ok(Self {
            domain,
            values,
            constraint_r,
        })
    }
}

/// Solver state saved next to a field CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub domain: StripDomain,
    pub constraint_r: f64,
    pub iteration: usize,
    pub energy_trace_tail: Vec<f64>,
}

impl Checkpoint {
    pub fn save(&self, field: &Field2D, csv_path: &std::path::Path) -> Result<()> {
        field.write_csv(std::fs::File::create(csv_path)?)?;
        let sidecar = csv_path.with_extension("json");
        std::fs::write(sidecar, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(csv_path: &std::path::Path) -> Result<(Field2D, Self)> {
        let sidecar = csv_path.with_extension("json");
        let cp: Checkpoint = serde_json::from_str(&std::fs::read_to_string(sidecar)?)?;
        let field = Field2D::read_csv(std::fs::File::open(csv_path)?, cp.domain, cp.constraint_r)?;
        Ok((field, cp))
    }
}
