use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Drawn dimensions of one transistor (or group of identical transistors).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransistorGeometry {
    pub name: String,
    pub w_um: f64,
    pub l_um: f64,
}

impl TransistorGeometry {
    pub fn new(name: &str, w_um: f64, l_um: f64) -> Result<Self> {
        if !(w_um > 0.0 && l_um > 0.0 && w_um.is_finite() && l_um.is_finite()) {
            return Err(Error::Parameter(format!(
                "{name}: W={w_um} L={l_um} must both be positive"
            )));
        }
        Ok(Self {
            name: name.to_string(),
            w_um,
            l_um,
        })
    }

    pub fn aspect_ratio(&self) -> f64 {
        self.w_um / self.l_um
    }

    pub fn area(&self) -> f64 {
        self.w_um * self.l_um
    }
}

/// Soma transistors, in signal order.
pub const SOMA_TRANSISTORS: [&str; 5] = ["M0", "M1", "M2", "M3", "M4"];

/// Geometry of every transistor of a soma and a synapse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryTable {
    pub transistors: Vec<TransistorGeometry>,
}

impl Default for GeometryTable {
    fn default() -> Self {
        let rows: [(&str, f64, f64); 16] = [
            ("M0", 2.7, 0.45),
            ("M1", 2.7, 0.45),
            ("M2", 2.7, 0.45),
            ("M3", 2.7, 0.45),
            ("M4", 2.7, 0.45),
            ("M10", 0.27, 0.54),
            ("M11", 0.54, 0.54),
            ("M12", 1.08, 0.54),
            ("M13", 0.27, 0.54),
            ("M14", 0.54, 0.54),
            ("M15", 1.08, 0.54),
            ("M16", 0.54, 0.54),
            ("M17", 0.54, 0.54),
            ("M18", 0.54, 0.54),
            ("M19", 0.54, 0.54),
            ("M20", 0.54, 0.54),
        ];
        Self {
            transistors: rows
                .iter()
                .map(|&(n, w, l)| TransistorGeometry {
                    name: n.to_string(),
                    w_um: w,
                    l_um: l,
                })
                .collect(),
        }
    }
}

impl GeometryTable {
    pub fn get(&self, name: &str) -> Result<&TransistorGeometry> {
        self.transistors
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| Error::Parameter(format!("no geometry for transistor {name}")))
    }

    /// Replaces (or adds) the entry with the same name.
    pub fn set(&mut self, geometry: TransistorGeometry) {
        match self.transistors.iter_mut().find(|t| t.name == geometry.name) {
            Some(slot) => *slot = geometry,
            None => self.transistors.push(geometry),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for t in &self.transistors {
            TransistorGeometry::new(&t.name, t.w_um, t.l_um)?;
        }
        for name in SOMA_TRANSISTORS {
            self.get(name)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_design_table() {
        let g = GeometryTable::default();
        for name in SOMA_TRANSISTORS {
            let t = g.get(name).unwrap();
            assert_eq!((t.w_um, t.l_um), (2.7, 0.45));
            assert!((t.aspect_ratio() - 6.0).abs() < 1e-12);
        }
        for (name, ratio) in [("M10", 0.5), ("M13", 0.5), ("M11", 1.0), ("M14", 1.0), ("M12", 2.0), ("M15", 2.0)] {
            assert!((g.get(name).unwrap().aspect_ratio() - ratio).abs() < 1e-12);
        }
        for i in 16..=20 {
            assert_eq!(g.get(&format!("M{i}")).unwrap().aspect_ratio(), 1.0);
        }
        assert!(g.validate().is_ok());
    }

    #[test]
    fn rejects_nonpositive_dimensions() {
        assert!(TransistorGeometry::new("M0", 0.0, 1.0).is_err());
        assert!(TransistorGeometry::new("M0", 1.0, -1.0).is_err());
        let mut g = GeometryTable::default();
        g.transistors[0].l_um = 0.0;
        assert!(g.validate().is_err());
    }
}
