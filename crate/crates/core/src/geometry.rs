//! Straight-tunnel deployment geometry.
//!
//! The transmit antenna sits at the tunnel entrance (axial coordinate 0) at
//! height `tx_height`; the receiver rides on the train roof at height
//! `rx_height` and horizontal offset `l1` from the entrance. `N` tags are
//! spread uniformly along the ceiling centerline at `i·L/(N+1)`.
//!
//! All lengths are in meters.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("tag index {index} out of range 1..={n_tags}")]
    IndexOutOfRange { index: usize, n_tags: usize },
    #[error("{name} must be {requirement}, got {value}")]
    InvalidParameter {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },
}

fn check(ok: bool, name: &'static str, requirement: &'static str, value: f64) -> Result<(), GeometryError> {
    if ok {
        Ok(())
    } else {
        Err(GeometryError::InvalidParameter {
            name,
            requirement,
            value,
        })
    }
}

/// Physical tunnel and antenna dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TunnelGeometry {
    pub height: f64,
    /// Carried for validation only; tags sit on the centerline so no
    /// distance depends on it.
    pub width: f64,
    pub length: f64,
    pub tx_height: f64,
    pub rx_height: f64,
}

impl TunnelGeometry {
    pub fn new(height: f64, width: f64, length: f64, tx_height: f64, rx_height: f64) -> Result<Self, GeometryError> {
        let geom = Self {
            height,
            width,
            length,
            tx_height,
            rx_height,
        };
        geom.validate()?;
        Ok(geom)
    }

    /// Measured subway-tunnel cross-section (H = 5.3 m, W = 4.8 m,
    /// H_t = 4.9 m, H_r = 3.4 m) with the given length.
    pub fn reference(length: f64) -> Result<Self, GeometryError> {
        Self::new(5.3, 4.8, length, 4.9, 3.4)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        check(
            self.height.is_finite() && self.height > 0.0,
            "height",
            "positive",
            self.height,
        )?;
        check(
            self.width.is_finite() && self.width > 0.0,
            "width",
            "positive",
            self.width,
        )?;
        check(
            self.length.is_finite() && self.length > 0.0,
            "length",
            "positive",
            self.length,
        )?;
        check(
            self.rx_height.is_finite() && self.rx_height > 0.0,
            "rx_height",
            "positive",
            self.rx_height,
        )?;
        check(
            self.tx_height > self.rx_height,
            "tx_height",
            "greater than rx_height",
            self.tx_height,
        )?;
        check(
            self.tx_height < self.height,
            "tx_height",
            "below the tunnel ceiling",
            self.tx_height,
        )?;
        Ok(())
    }
}

/// Axial coordinate of tag `index` (1-based) out of `n_tags` in a tunnel of
/// the given length.
pub fn tag_position(index: usize, n_tags: usize, length: f64) -> Result<f64, GeometryError> {
    if index == 0 || index > n_tags {
        return Err(GeometryError::IndexOutOfRange { index, n_tags });
    }
    check(length.is_finite() && length > 0.0, "length", "positive", length)?;
    Ok(index as f64 * length / (n_tags as f64 + 1.0))
}

/// Link distances and path-loss weights for one receiver position.
///
/// Per-tag vectors are 0-based: entry `k` belongs to tag `k + 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeploymentLayout {
    n_tags: usize,
    l1: f64,
    alpha: f64,
    eta: f64,
    d_h: f64,
    d_f: Vec<f64>,
    d_g: Vec<f64>,
    c: Vec<f64>,
    w: Vec<f64>,
    c0: f64,
    c_const: f64,
}

/// Builds the layout for `n_tags` ceiling tags with the receiver at `l1`.
///
/// `eta = 0` is accepted and describes a layout with backscatter switched
/// off; every estimator then returns zero.
pub fn build_layout(
    geom: &TunnelGeometry,
    n_tags: usize,
    l1: f64,
    alpha: f64,
    eta: f64,
) -> Result<DeploymentLayout, GeometryError> {
    geom.validate()?;
    check(
        l1.is_finite() && (0.0..=geom.length).contains(&l1),
        "l1",
        "within [0, length]",
        l1,
    )?;
    check(alpha.is_finite() && alpha > 0.0, "alpha", "positive", alpha)?;
    check(
        eta.is_finite() && (0.0..=1.0).contains(&eta),
        "eta",
        "within [0, 1]",
        eta,
    )?;

    let dh_sq = (geom.tx_height - geom.rx_height).powi(2) + l1 * l1;
    let d_h = dh_sq.sqrt();

    let tx_drop = geom.height - geom.tx_height;
    let rx_drop = geom.height - geom.rx_height;
    let mut d_f = Vec::with_capacity(n_tags);
    let mut d_g = Vec::with_capacity(n_tags);
    let mut c = Vec::with_capacity(n_tags);
    let mut w = Vec::with_capacity(n_tags);
    for i in 1..=n_tags {
        let x = tag_position(i, n_tags, geom.length)?;
        let df = (tx_drop * tx_drop + x * x).sqrt();
        let dg = (rx_drop * rx_drop + (l1 - x).powi(2)).sqrt();
        // (d_g d_f)^α computed once so that w·c² = 1 holds to rounding.
        let loss = (dg * df).powf(alpha);
        d_f.push(df);
        d_g.push(dg);
        c.push(loss.sqrt());
        w.push(1.0 / loss);
    }

    let c0 = d_h.powf(alpha / 2.0) * eta;
    Ok(DeploymentLayout {
        n_tags,
        l1,
        alpha,
        eta,
        d_h,
        d_f,
        d_g,
        c,
        w,
        c0,
        c_const: c0 * c0,
    })
}

impl DeploymentLayout {
    pub fn n_tags(&self) -> usize {
        self.n_tags
    }
    pub fn l1(&self) -> f64 {
        self.l1
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn eta(&self) -> f64 {
        self.eta
    }
    /// Direct Tx→Rx distance.
    pub fn d_h(&self) -> f64 {
        self.d_h
    }
    /// Tx→tag distances.
    pub fn d_f(&self) -> &[f64] {
        &self.d_f
    }
    /// Tag→Rx distances.
    pub fn d_g(&self) -> &[f64] {
        &self.d_g
    }
    /// Per-tag amplitude loss `sqrt(d_g^α d_f^α)`.
    pub fn c(&self) -> &[f64] {
        &self.c
    }
    /// Per-tag power weight `1/(d_g^α d_f^α)`.
    pub fn w(&self) -> &[f64] {
        &self.w
    }
    /// `d_h^{α/2}·η`.
    pub fn c0(&self) -> f64 {
        self.c0
    }
    /// `d_h^α·η²`, the scale in `P = 1 − E[exp(−c|G_a|²)]`.
    pub fn c_const(&self) -> f64 {
        self.c_const
    }
    /// Mean direct-link power `1/d_h^α`.
    pub fn direct_mean_power(&self) -> f64 {
        self.d_h.powf(-self.alpha)
    }
}
