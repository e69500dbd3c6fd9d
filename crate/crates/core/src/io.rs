//! Stable JSON file formats for instances and menus, with decimal float
//! serialization at 17 significant digits so doubles round-trip
//! exactly.

use crate::dist::{make_product, DistError, Marginal, ProductDistribution};
use crate::menu::{
    ItemPermutationGroup, LotteryAllocation, MenuOption, SymmetricComponent, SymmetricMenu,
};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error("malformed menu: {0}")]
    BadMenu(String),
}

/// On-disk instance: `{"k": ..., "items": [{"values": [...], "probs": [...]}]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceFile {
    pub k: usize,
    pub items: Vec<ItemSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ItemSpec {
    pub values: Vec<f64>,
    pub probs: Vec<f64>,
}

impl InstanceFile {
    pub fn from_dist(d: &ProductDistribution) -> Self {
        InstanceFile {
            k: d.k(),
            items: d
                .marginals()
                .iter()
                .map(|m| ItemSpec {
                    values: m.values().to_vec(),
                    probs: m.probs().to_vec(),
                })
                .collect(),
        }
    }

    pub fn to_dist(&self) -> Result<ProductDistribution, DistError> {
        let marginals = self
            .items
            .iter()
            .enumerate()
            .map(|(i, spec)| Marginal::new_indexed(spec.values.clone(), spec.probs.clone(), i))
            .collect::<Result<Vec<_>, _>>()?;
        make_product(marginals, self.k)
    }
}

/// On-disk menu: `{"components": [{"blocks": [[...]], "options":
/// [{"x": [...], "price": ...}]}]}`; `n` is the total item count across
/// one component's blocks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MenuFile {
    pub components: Vec<ComponentSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComponentSpec {
    pub blocks: Vec<Vec<usize>>,
    pub options: Vec<OptionSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptionSpec {
    pub x: Vec<f64>,
    pub price: f64,
}

impl MenuFile {
    pub fn from_menu(menu: &SymmetricMenu) -> Self {
        MenuFile {
            components: menu
                .components
                .iter()
                .map(|c| ComponentSpec {
                    blocks: c.group.blocks().to_vec(),
                    options: c
                        .options
                        .iter()
                        .map(|o| OptionSpec {
                            x: o.alloc.x.clone(),
                            price: o.price,
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    /// Rebuilds the menu; `n` is inferred from the first component's
    /// blocks (or given explicitly for an empty menu).
    pub fn to_menu(&self, n_hint: Option<usize>) -> Result<SymmetricMenu, IoError> {
        let n = match (self.components.first(), n_hint) {
            (_, Some(n)) => n,
            (Some(c), None) => c.blocks.iter().map(Vec::len).sum(),
            (None, None) => 0,
        };
        let mut components = Vec::with_capacity(self.components.len());
        for (ci, spec) in self.components.iter().enumerate() {
            let group = ItemPermutationGroup::new(spec.blocks.clone(), n).ok_or_else(|| {
                IoError::BadMenu(format!("component {ci}: blocks do not partition 0..{n}"))
            })?;
            let mut options = Vec::with_capacity(spec.options.len());
            for (oi, o) in spec.options.iter().enumerate() {
                if o.x.len() != n {
                    return Err(IoError::BadMenu(format!(
                        "component {ci} option {oi}: allocation length {} != {n}",
                        o.x.len()
                    )));
                }
                if o.x.iter().any(|&xi| !(0.0..=1.0).contains(&xi)) {
                    return Err(IoError::BadMenu(format!(
                        "component {ci} option {oi}: allocation outside [0,1]"
                    )));
                }
                options.push(MenuOption {
                    alloc: LotteryAllocation { x: o.x.clone() },
                    price: o.price,
                });
            }
            components.push(SymmetricComponent { group, options });
        }
        Ok(SymmetricMenu { n, components })
    }
}

/// serde_json formatter printing floats as `{:.16e}` (17 significant
/// digits), enough for exact f64 round trips.
struct PreciseFormatter;

impl serde_json::ser::Formatter for PreciseFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + Write,
    {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()>
    where
        W: ?Sized + Write,
    {
        write!(writer, "{value:.8e}")
    }
}

/// Serializes with exact-precision floats plus a trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String, IoError> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, PreciseFormatter);
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    Ok(std::fs::write(path, to_json_string(value)?)?)
}

pub fn load_instance(path: &Path) -> Result<ProductDistribution, IoError> {
    let text = std::fs::read_to_string(path)?;
    let file: InstanceFile = serde_json::from_str(&text)?;
    Ok(file.to_dist()?)
}

pub fn save_instance(path: &Path, d: &ProductDistribution) -> Result<(), IoError> {
    save_json(path, &InstanceFile::from_dist(d))
}

pub fn load_menu(path: &Path) -> Result<SymmetricMenu, IoError> {
    let text = std::fs::read_to_string(path)?;
    let file: MenuFile = serde_json::from_str(&text)?;
    file.to_menu(None)
}

pub fn save_menu(path: &Path, menu: &SymmetricMenu) -> Result<(), IoError> {
    save_json(path, &MenuFile::from_menu(menu))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::menu::ItemPermutationGroup;

    #[test]
    fn instance_round_trip_atom_exact() {
        let m1 = Marginal::new(vec![0.1, 1.0 / 3.0, 7.25], vec![0.2, 0.3, 0.5]).unwrap();
        let m2 = Marginal::new(vec![0.0, 1e-17, 1e6], vec![0.7, 0.2, 0.1]).unwrap();
        let d = make_product(vec![m1, m2], 2).unwrap();
        let text = to_json_string(&InstanceFile::from_dist(&d)).unwrap();
        let parsed: InstanceFile = serde_json::from_str(&text).unwrap();
        let d2 = parsed.to_dist().unwrap();
        for i in 0..2 {
            assert!(d.marginal(i).atom_equal(d2.marginal(i), 0.0));
        }
        assert_eq!(d.k(), d2.k());
    }

    #[test]
    fn menu_round_trip() {
        let group = ItemPermutationGroup::new(vec![vec![0, 2], vec![1]], 3).unwrap();
        let menu = SymmetricMenu {
            n: 3,
            components: vec![SymmetricComponent {
                group,
                options: vec![MenuOption {
                    alloc: LotteryAllocation {
                        x: vec![0.125, 1.0 / 3.0, 0.0],
                    },
                    price: 2.0 / 7.0,
                }],
            }],
        };
        let text = to_json_string(&MenuFile::from_menu(&menu)).unwrap();
        let parsed: MenuFile = serde_json::from_str(&text).unwrap();
        let menu2 = parsed.to_menu(None).unwrap();
        assert_eq!(menu.n, menu2.n);
        assert_eq!(
            menu.components[0].options[0].alloc.x,
            menu2.components[0].options[0].alloc.x
        );
        assert_eq!(menu.components[0].options[0].price, menu2.components[0].options[0].price);
    }

    #[test]
    fn floats_serialized_in_decimal() {
        let text = to_json_string(&vec![0.1_f64]).unwrap();
        assert!(text.contains('e'), "scientific decimal form: {text}");
        let parsed: Vec<f64> = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed[0], 0.1);
    }

    #[test]
    fn bad_menu_rejected() {
        let bad = MenuFile {
            components: vec![ComponentSpec {
                blocks: vec![vec![0], vec![0]],
                options: vec![],
            }],
        };
        assert!(bad.to_menu(None).is_err());
        let bad_alloc = MenuFile {
            components: vec![ComponentSpec {
                blocks: vec![vec![0]],
                options: vec![OptionSpec {
                    x: vec![1.5],
                    price: 1.0,
                }],
            }],
        };
        assert!(bad_alloc.to_menu(None).is_err());
    }

    #[test]
    fn invalid_instance_cites_marginal() {
        let bad = InstanceFile {
            k: 1,
            items: vec![ItemSpec {
                values: vec![1.0],
                probs: vec![0.9],
            }],
        };
        let err = bad.to_dist().unwrap_err();
        assert!(err.to_string().contains('0'), "message names the index: {err}");
    }
}
