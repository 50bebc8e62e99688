//! Game instances: players, strategy sets, semi-norms, objectives and
//! constraint maps, plus loading and validation of instance files.
//!
//! Variable naming inside expressions:
//!
//! * `x{j}_{k}` is coordinate `k` of player `j`'s public strategy (both
//!   1-based, `j` is the player's position in the file).
//! * `z_{k}` is coordinate `k` of the evaluating player's own decision.
//!
//! In a `gnep` instance an objective may use rival `x` variables and its own
//! `z` variables, and a constraint map may use rival `x` variables only. In a
//! `quopt` instance the single player's objective uses `z` only while its
//! constraint map `K(u)` is written over the player's own strategy `x1_{k}`.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::expr::{self, CompiledExpr, EvalError, Expr, ParseError};
use crate::geometry::{ConvexSet, GeometryError, RealizedSet, SemiNorm};

/// One vector per player, in player order.
pub type Profile = Vec<Vec<f64>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GameKind {
    Gnep,
    Quopt,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintMapSpec {
    /// `F(x) = shift(x) + base`.
    Translate { shift: Vec<Expr>, base: ConvexSet },
    /// `F(x) = [lower(x), upper(x)]`.
    ParamBox { lower: Vec<Expr>, upper: Vec<Expr> },
}

impl ConstraintMapSpec {
    pub fn dim(&self) -> usize {
        match self {
            ConstraintMapSpec::Translate { shift, .. } => shift.len(),
            ConstraintMapSpec::ParamBox { lower, .. } => lower.len(),
        }
    }

    fn exprs(&self) -> impl Iterator<Item = &Expr> {
        let (a, b): (&[Expr], &[Expr]) = match self {
            ConstraintMapSpec::Translate { shift, .. } => (shift, &[]),
            ConstraintMapSpec::ParamBox { lower, upper } => (lower, upper),
        };
        a.iter().chain(b)
    }

    pub fn variables(&self) -> std::collections::BTreeSet<String> {
        self.exprs().flat_map(|e| e.variables()).collect()
    }

    pub fn compile<S: AsRef<str>>(&self, slots: &[S]) -> Result<CompiledMap, EvalError> {
        let comp = |v: &[Expr]| v.iter().map(|e| e.compile(slots)).collect::<Result<Vec<_>, _>>();
        Ok(match self {
            ConstraintMapSpec::Translate { shift, base } => CompiledMap::Translate {
                shift: comp(shift)?,
                base: base.clone(),
            },
            ConstraintMapSpec::ParamBox { lower, upper } => CompiledMap::ParamBox {
                lower: comp(lower)?,
                upper: comp(upper)?,
            },
        })
    }
}

#[derive(Debug, Clone)]
pub enum CompiledMap {
    Translate {
        shift: Vec<CompiledExpr>,
        base: ConvexSet,
    },
    ParamBox {
        lower: Vec<CompiledExpr>,
        upper: Vec<CompiledExpr>,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RealizeError {
    #[error("constraint map of player {player}, coordinate {coordinate}: {source}")]
    Eval {
        player: usize,
        coordinate: usize,
        source: EvalError,
    },
    #[error("constraint map of player {player} is empty at coordinate {coordinate}: lower {lower} > upper {upper}")]
    Empty {
        player: usize,
        coordinate: usize,
        lower: f64,
        upper: f64,
    },
}

impl CompiledMap {
    /// Evaluates the map at `values` (laid out as the compile-time slots).
    /// `player` is only used to label errors (1-based).
    pub fn realize(&self, player: usize, values: &[f64]) -> Result<RealizedSet, RealizeError> {
        let eval_all = |v: &[CompiledExpr]| -> Result<Vec<f64>, RealizeError> {
            v.iter()
                .enumerate()
                .map(|(k, e)| {
                    e.eval(values).map_err(|source| RealizeError::Eval {
                        player,
                        coordinate: k + 1,
                        source,
                    })
                })
                .collect()
        };
        match self {
            CompiledMap::Translate { shift, base } => {
                Ok(RealizedSet::new(eval_all(shift)?, base.clone()))
            }
            CompiledMap::ParamBox { lower, upper } => {
                let lo = eval_all(lower)?;
                let hi = eval_all(upper)?;
                if let Some(k) = (0..lo.len()).find(|&k| lo[k] > hi[k]) {
                    return Err(RealizeError::Empty {
                        player,
                        coordinate: k + 1,
                        lower: lo[k],
                        upper: hi[k],
                    });
                }
                Ok(RealizedSet::unshifted(ConvexSet::Box { lower: lo, upper: hi }))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlayerSpec {
    pub name: String,
    pub dim: usize,
    pub strategy_set: ConvexSet,
    pub seminorm: SemiNorm,
    pub objective: Expr,
    pub constraint_map: ConstraintMapSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameInstance {
    pub kind: GameKind,
    pub players: Vec<PlayerSpec>,
    pub metadata: Map<String, Value>,
}

/// Pair `(x̃, ỹ)`: a strategy profile and the auxiliary best-response profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSolution {
    pub x_tilde: Profile,
    pub y_tilde: Profile,
}

// ---------------------------------------------------------------------------
// Diagnostics

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Schema,
    Scope,
    Dimension,
    NonFinite,
    Value,
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Category::Schema => "schema error",
            Category::Scope => "scope violation",
            Category::Dimension => "dimension mismatch",
            Category::NonFinite => "non-finite value",
            Category::Value => "invalid value",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub category: Category,
    pub location: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.category, self.location, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("expression at {location}: {source}")]
    Expression { location: String, source: ParseError },
    #[error("{0}")]
    Invalid(Diagnostic),
}

// ---------------------------------------------------------------------------
// Variables

/// A variable reference recognized by the naming convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarRef {
    /// `x{player}_{coord}`, both 1-based.
    Public { player: usize, coord: usize },
    /// `z_{coord}`, 1-based.
    Own { coord: usize },
}

fn positive_index(s: &str) -> Option<usize> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) || s.starts_with('0') {
        return None;
    }
    s.parse().ok()
}

pub fn classify_var(name: &str) -> Option<VarRef> {
    if let Some(rest) = name.strip_prefix("z_") {
        return positive_index(rest).map(|coord| VarRef::Own { coord });
    }
    let rest = name.strip_prefix('x')?;
    let (p, c) = rest.split_once('_')?;
    Some(VarRef::Public {
        player: positive_index(p)?,
        coord: positive_index(c)?,
    })
}

pub fn public_var(player: usize, coord: usize) -> String {
    format!("x{}_{}", player + 1, coord + 1)
}

pub fn own_var(coord: usize) -> String {
    format!("z_{}", coord + 1)
}

impl GameInstance {
    pub fn n_players(&self) -> usize {
        self.players.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.players.iter().map(|p| p.dim).collect()
    }

    /// Every public strategy variable, player-major.
    pub fn public_slots(&self) -> Vec<String> {
        self.players
            .iter()
            .enumerate()
            .flat_map(|(j, p)| (0..p.dim).map(move |k| public_var(j, k)))
            .collect()
    }

    /// Slots for player `i`'s objective: all public variables, then `z`.
    pub fn objective_slots(&self, i: usize) -> Vec<String> {
        let mut s = self.public_slots();
        s.extend((0..self.players[i].dim).map(own_var));
        s
    }

    pub fn check_profile(&self, profile: &[Vec<f64>]) -> Result<(), GeometryError> {
        if profile.len() != self.players.len() {
            return Err(GeometryError::DimensionMismatch {
                expected: self.players.len(),
                found: profile.len(),
            });
        }
        for (p, v) in self.players.iter().zip(profile) {
            if p.dim != v.len() {
                return Err(GeometryError::DimensionMismatch {
                    expected: p.dim,
                    found: v.len(),
                });
            }
        }
        Ok(())
    }

    /// `F_i` at the given profile. Player `i`'s own entry is only read for
    /// `quopt` instances, where the constraint map depends on it.
    pub fn realize_constraint(&self, i: usize, profile: &[Vec<f64>]) -> Result<RealizedSet, RealizeError> {
        let slots = self.public_slots();
        let map = self.players[i]
            .constraint_map
            .compile(&slots)
            .map_err(|source| RealizeError::Eval {
                player: i + 1,
                coordinate: 0,
                source,
            })?;
        let flat: Vec<f64> = profile.iter().flatten().copied().collect();
        map.realize(i + 1, &flat)
    }

    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let mut err = |category, location: String, message: String| {
            out.push(Diagnostic {
                severity: Severity::Error,
                category,
                location,
                message,
            })
        };
        if self.players.is_empty() {
            err(Category::Schema, "players".into(), "at least one player is required".into());
        }
        if self.kind == GameKind::Quopt && self.players.len() != 1 {
            err(Category::Schema, "players".into(), "quopt requires exactly one player".into());
        }
        let mut names = HashSet::new();
        for (i, p) in self.players.iter().enumerate() {
            let at = |field: &str| format!("players[{i}].{field}");
            if !names.insert(p.name.as_str()) {
                err(Category::Schema, at("name"), format!("duplicate player name {:?}", p.name));
            }
            if p.dim == 0 {
                err(Category::Dimension, at("dim"), "dim must be positive".into());
            }
            if p.strategy_set.dim() != p.dim {
                err(
                    Category::Dimension,
                    at("strategy_set"),
                    format!("dimension {} differs from dim {}", p.strategy_set.dim(), p.dim),
                );
            } else {
                for (field, msg) in p.strategy_set.problems() {
                    let cat = if msg.contains("non-finite") {
                        Category::NonFinite
                    } else {
                        Category::Value
                    };
                    err(cat, at(&format!("strategy_set.{field}")), msg);
                }
            }
            if p.seminorm.dim() != p.dim {
                err(
                    Category::Dimension,
                    at("seminorm.weights"),
                    format!("length {} differs from dim {}", p.seminorm.dim(), p.dim),
                );
            }
            if p.seminorm.weights.iter().any(|w| !w.is_finite()) {
                err(Category::NonFinite, at("seminorm.weights"), "weights must be finite".into());
            } else if p.seminorm.weights.iter().any(|&w| w < 0.0) {
                err(Category::Value, at("seminorm.weights"), "weights must be nonnegative".into());
            } else if !p.seminorm.is_norm() && !matches!(p.strategy_set, ConvexSet::Box { .. }) {
                err(
                    Category::Value,
                    at("seminorm.weights"),
                    "zero weights are only supported with box strategy sets".into(),
                );
            }
            if p.constraint_map.dim() != p.dim {
                err(
                    Category::Dimension,
                    at("constraint_map"),
                    format!("dimension {} differs from dim {}", p.constraint_map.dim(), p.dim),
                );
            }
            match &p.constraint_map {
                ConstraintMapSpec::Translate { base, .. } => {
                    if base.dim() != p.dim {
                        err(
                            Category::Dimension,
                            at("constraint_map.base"),
                            format!("dimension {} differs from dim {}", base.dim(), p.dim),
                        );
                    } else {
                        for (field, msg) in base.problems() {
                            err(Category::Value, at(&format!("constraint_map.base.{field}")), msg);
                        }
                    }
                }
                ConstraintMapSpec::ParamBox { lower, upper } => {
                    if lower.len() != upper.len() {
                        err(
                            Category::Dimension,
                            at("constraint_map.upper"),
                            "lower and upper have different lengths".into(),
                        );
                    }
                }
            }

            for v in p.objective.variables() {
                let problem = match classify_var(&v) {
                    Some(VarRef::Own { coord }) if coord <= p.dim => None,
                    Some(VarRef::Own { .. }) => Some((Category::Dimension, format!("`{v}` exceeds dim {}", p.dim))),
                    Some(VarRef::Public { .. }) if self.kind == GameKind::Quopt => Some((
                        Category::Scope,
                        format!("quopt objective may only use own variables z_k, found `{v}`"),
                    )),
                    Some(VarRef::Public { player, .. }) if player == i + 1 => Some((
                        Category::Scope,
                        format!("objective uses own public variable `{v}`; use z_k instead"),
                    )),
                    Some(VarRef::Public { player, coord }) => self.public_var_problem(player, coord, &v),
                    None => Some((Category::Scope, format!("unknown variable `{v}`"))),
                };
                if let Some((cat, msg)) = problem {
                    err(cat, at("objective"), msg);
                }
            }
            for v in p.constraint_map.variables() {
                let problem = match classify_var(&v) {
                    Some(VarRef::Own { .. }) => Some((
                        Category::Scope,
                        format!("own variable `{v}` inside constraint map"),
                    )),
                    Some(VarRef::Public { player, .. })
                        if player == i + 1 && self.kind == GameKind::Gnep =>
                    {
                        Some((
                            Category::Scope,
                            format!("constraint map may only use rival variables, found `{v}`"),
                        ))
                    }
                    Some(VarRef::Public { player, coord }) => self.public_var_problem(player, coord, &v),
                    None => Some((Category::Scope, format!("unknown variable `{v}`"))),
                };
                if let Some((cat, msg)) = problem {
                    err(cat, at("constraint_map"), msg);
                }
            }
        }
        out
    }

    fn public_var_problem(&self, player: usize, coord: usize, v: &str) -> Option<(Category, String)> {
        match self.players.get(player - 1) {
            None => Some((Category::Scope, format!("`{v}` refers to a non-existent player"))),
            Some(q) if coord > q.dim => Some((Category::Dimension, format!("`{v}` exceeds that player's dim {}", q.dim))),
            Some(_) => None,
        }
    }

    pub fn to_json(&self) -> String {
        let file = InstanceFile::from(self);
        serde_json::to_string_pretty(&file).expect("instance serializes")
    }

    pub fn prepare(&self) -> Result<PreparedGame<'_>, EvalError> {
        PreparedGame::new(self)
    }
}

// ---------------------------------------------------------------------------
// File format

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    kind: GameKind,
    #[serde(default)]
    metadata: Map<String, Value>,
    players: Vec<PlayerFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlayerFile {
    name: String,
    dim: usize,
    strategy_set: ConvexSet,
    seminorm: SemiNorm,
    objective: String,
    constraint_map: MapFile,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum MapFile {
    Translate { shift: Vec<String>, base: ConvexSet },
    ParamBox { lower: Vec<String>, upper: Vec<String> },
}

impl From<&GameInstance> for InstanceFile {
    fn from(inst: &GameInstance) -> Self {
        let strs = |v: &[Expr]| v.iter().map(|e| e.to_string()).collect();
        InstanceFile {
            kind: inst.kind,
            metadata: inst.metadata.clone(),
            players: inst
                .players
                .iter()
                .map(|p| PlayerFile {
                    name: p.name.clone(),
                    dim: p.dim,
                    strategy_set: p.strategy_set.clone(),
                    seminorm: p.seminorm.clone(),
                    objective: p.objective.to_string(),
                    constraint_map: match &p.constraint_map {
                        ConstraintMapSpec::Translate { shift, base } => MapFile::Translate {
                            shift: strs(shift),
                            base: base.clone(),
                        },
                        ConstraintMapSpec::ParamBox { lower, upper } => MapFile::ParamBox {
                            lower: strs(lower),
                            upper: strs(upper),
                        },
                    },
                })
                .collect(),
        }
    }
}

fn parse_at(text: &str, location: String) -> Result<Expr, ModelError> {
    expr::parse(text).map_err(|source| ModelError::Expression { location, source })
}

fn parse_all(texts: &[String], location: &str) -> Result<Vec<Expr>, ModelError> {
    texts
        .iter()
        .enumerate()
        .map(|(k, t)| parse_at(t, format!("{location}[{k}]")))
        .collect()
}

/// Parses and validates an instance file.
pub fn load_instance(text: &str) -> Result<GameInstance, ModelError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: InstanceFile = serde_path_to_error::deserialize(de).map_err(|e| ModelError::Schema {
        path: e.path().to_string(),
        message: e.into_inner().to_string(),
    })?;
    let mut players = Vec::with_capacity(file.players.len());
    for (i, p) in file.players.into_iter().enumerate() {
        let objective = parse_at(&p.objective, format!("players[{i}].objective"))?;
        let constraint_map = match p.constraint_map {
            MapFile::Translate { shift, base } => ConstraintMapSpec::Translate {
                shift: parse_all(&shift, &format!("players[{i}].constraint_map.shift"))?,
                base,
            },
            MapFile::ParamBox { lower, upper } => ConstraintMapSpec::ParamBox {
                lower: parse_all(&lower, &format!("players[{i}].constraint_map.lower"))?,
                upper: parse_all(&upper, &format!("players[{i}].constraint_map.upper"))?,
            },
        };
        players.push(PlayerSpec {
            name: p.name,
            dim: p.dim,
            strategy_set: p.strategy_set,
            seminorm: p.seminorm,
            objective,
            constraint_map,
        });
    }
    let inst = GameInstance {
        kind: file.kind,
        players,
        metadata: file.metadata,
    };
    if let Some(d) = inst
        .validate()
        .into_iter()
        .find(|d| d.severity == Severity::Error)
    {
        return Err(ModelError::Invalid(d));
    }
    Ok(inst)
}

/// Loads a candidate file `{"x_tilde": [[...]], "y_tilde": [[...]]}`.
pub fn load_candidate(text: &str) -> Result<CandidateSolution, ModelError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| ModelError::Schema {
        path: e.path().to_string(),
        message: e.into_inner().to_string(),
    })
}

// ---------------------------------------------------------------------------
// Compiled view

/// An instance with every expression compiled against fixed slot layouts.
#[derive(Debug, Clone)]
pub struct PreparedGame<'a> {
    pub inst: &'a GameInstance,
    objectives: Vec<CompiledExpr>,
    maps: Vec<CompiledMap>,
    offsets: Vec<usize>,
    n_public: usize,
}

impl<'a> PreparedGame<'a> {
    pub fn new(inst: &'a GameInstance) -> Result<Self, EvalError> {
        let public = inst.public_slots();
        let objectives = (0..inst.n_players())
            .map(|i| inst.players[i].objective.compile(&inst.objective_slots(i)))
            .collect::<Result<_, _>>()?;
        let maps = inst
            .players
            .iter()
            .map(|p| p.constraint_map.compile(&public))
            .collect::<Result<_, _>>()?;
        let mut offsets = Vec::with_capacity(inst.n_players());
        let mut acc = 0;
        for p in &inst.players {
            offsets.push(acc);
            acc += p.dim;
        }
        Ok(PreparedGame {
            inst,
            objectives,
            maps,
            offsets,
            n_public: acc,
        })
    }

    pub fn flatten(&self, profile: &[Vec<f64>]) -> Vec<f64> {
        profile.iter().flatten().copied().collect()
    }

    pub fn unflatten(&self, flat: &[f64]) -> Profile {
        self.inst
            .players
            .iter()
            .zip(&self.offsets)
            .map(|(p, &o)| flat[o..o + p.dim].to_vec())
            .collect()
    }

    pub fn n_public(&self) -> usize {
        self.n_public
    }

    pub fn realize(&self, i: usize, flat_x: &[f64]) -> Result<RealizedSet, RealizeError> {
        self.maps[i].realize(i + 1, flat_x)
    }

    /// Evaluator of `u_i(x_{-i}, ·)` with the public profile fixed.
    pub fn objective_at(&self, i: usize, flat_x: &[f64]) -> Objective<'_> {
        let mut buf = Vec::with_capacity(self.n_public + self.inst.players[i].dim);
        buf.extend_from_slice(flat_x);
        buf.resize(self.n_public + self.inst.players[i].dim, 0.0);
        Objective {
            expr: &self.objectives[i],
            buf,
            z_offset: self.n_public,
        }
    }
}

/// `z ↦ u_i(x_{-i}, z)` for a fixed rival profile.
pub struct Objective<'a> {
    expr: &'a CompiledExpr,
    buf: Vec<f64>,
    z_offset: usize,
}

impl Objective<'_> {
    pub fn value(&mut self, z: &[f64]) -> Result<f64, EvalError> {
        self.buf[self.z_offset..].copy_from_slice(z);
        self.expr.eval(&self.buf)
    }

    pub fn gradient(&mut self, z: &[f64]) -> Result<Vec<f64>, EvalError> {
        self.buf[self.z_offset..].copy_from_slice(z);
        let slots: Vec<usize> = (self.z_offset..self.buf.len()).collect();
        self.expr.grad_fd(&self.buf, &slots, None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples;

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    fn gnep() -> GameInstance {
        load_instance(examples::PAPER_GNEP).unwrap()
    }

    #[test]
    fn loads_bundled_gnep_instance() {
        let inst = gnep();
        assert_eq!(inst.kind, GameKind::Gnep);
        assert_eq!(inst.dims(), vec![2, 2]);
        assert!(inst.validate().is_empty());
    }

    #[test]
    fn quopt_needs_one_player() {
        let text = examples::PAPER_GNEP.replacen("\"gnep\"", "\"quopt\"", 1);
        match load_instance(&text).unwrap_err() {
            ModelError::Invalid(d) => {
                assert_eq!(d.category, Category::Schema);
                assert!(d.message.contains("quopt requires exactly one player"), "{d}");
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn own_variable_in_constraint_map_is_a_scope_violation() {
        let mut inst = gnep();
        inst.players[0].constraint_map = ConstraintMapSpec::Translate {
            shift: vec![expr::parse("z_1").unwrap(), expr::parse("0").unwrap()],
            base: ConvexSet::unit_box(2),
        };
        let text = inst.to_json();
        match load_instance(&text).unwrap_err() {
            ModelError::Invalid(d) => assert_eq!(d.category, Category::Scope),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn schema_errors_carry_a_path() {
        let text = examples::PAPER_GNEP.replacen("\"dim\": 2", "\"dim\": \"two\"", 1);
        match load_instance(&text).unwrap_err() {
            ModelError::Schema { path, .. } => assert_eq!(path, "players[0].dim"),
            e => panic!("{e}"),
        }
        let text = examples::PAPER_GNEP.replacen("\"seminorm\"", "\"semi\"", 1);
        assert!(matches!(load_instance(&text), Err(ModelError::Schema { .. })));
    }

    #[test]
    fn syntax_errors_carry_location() {
        let text = examples::PAPER_GNEP.replacen("2*z_1 + 2*z_2 + 3*x2_2", "2*z_1 +", 1);
        match load_instance(&text).unwrap_err() {
            ModelError::Expression { location, .. } => assert_eq!(location, "players[0].objective"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn realize_translated_constraints() {
        let inst = gnep();
        let prof = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        let f1 = inst.realize_constraint(0, &prof).unwrap();
        assert!((f1.shift[0] - SQRT2).abs() < 1e-12 && (f1.shift[1] - SQRT2).abs() < 1e-12);
        assert_eq!(f1.base, ConvexSet::unit_box(2));
        let f2 = inst.realize_constraint(1, &prof).unwrap();
        assert!((f2.shift[0] - 1.0).abs() < 1e-12 && (f2.shift[1] - 1.0).abs() < 1e-12);

        // rival at the origin: 2y/‖y‖ divides by zero
        let err = inst
            .realize_constraint(0, &[vec![1.0, 1.0], vec![0.0, 0.0]])
            .unwrap_err();
        assert!(matches!(err, RealizeError::Eval { player: 1, .. }));
    }

    #[test]
    fn empty_param_box() {
        let mut inst = load_instance(examples::SELFMAP_BOX).unwrap();
        inst.players[0].constraint_map = ConstraintMapSpec::ParamBox {
            lower: vec![expr::parse("x2_1").unwrap()],
            upper: vec![expr::parse("x2_1 - 1").unwrap()],
        };
        let err = inst
            .realize_constraint(0, &[vec![0.5], vec![0.5]])
            .unwrap_err();
        assert!(matches!(err, RealizeError::Empty { player: 1, coordinate: 1, .. }));
    }

    #[test]
    fn validation_messages() {
        let mut inst = gnep();
        assert!(inst.validate().is_empty());
        inst.players[0].seminorm = SemiNorm::new(vec![-1.0, 1.0]);
        let d = inst.validate();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].message, "weights must be nonnegative");

        let mut inst = gnep();
        inst.players[1].strategy_set = ConvexSet::Box {
            lower: vec![0.0, 0.0],
            upper: vec![1.0, -1.0],
        };
        let d = inst.validate();
        assert_eq!(d.len(), 1);
        assert!(d[0].message.contains("lower ≤ upper violated at coordinate 2"));
        assert_eq!(d[0].location, "players[1].strategy_set.lower/upper[1]");

        let mut inst = gnep();
        inst.players[1].name = inst.players[0].name.clone();
        assert!(inst.validate()[0].message.contains("duplicate"));

        let mut inst = gnep();
        inst.players[0].objective = expr::parse("x1_1 + z_1").unwrap();
        assert_eq!(inst.validate()[0].category, Category::Scope);

        let mut inst = gnep();
        inst.players[0].objective = expr::parse("z_3").unwrap();
        assert_eq!(inst.validate()[0].category, Category::Dimension);
    }

    #[test]
    fn non_finite_bounds_rejected() {
        let text = examples::SELFMAP_BOX.replacen("\"upper\": [1.0]", "\"upper\": [1e400]", 1);
        // serde_json maps 1e400 to an error or inf depending on features; either way it is rejected
        assert!(load_instance(&text).is_err());
    }

    #[test]
    fn json_round_trip() {
        for text in examples::ALL.iter().map(|(_, t)| *t) {
            let inst = load_instance(text).unwrap();
            let again = load_instance(&inst.to_json()).unwrap();
            assert_eq!(inst, again);
        }
    }

    #[test]
    fn variable_classification() {
        assert_eq!(classify_var("x2_1"), Some(VarRef::Public { player: 2, coord: 1 }));
        assert_eq!(classify_var("x12_3"), Some(VarRef::Public { player: 12, coord: 3 }));
        assert_eq!(classify_var("z_4"), Some(VarRef::Own { coord: 4 }));
        assert_eq!(classify_var("z_0"), None);
        assert_eq!(classify_var("x0_1"), None);
        assert_eq!(classify_var("y"), None);
    }

    #[test]
    fn prepared_objective_matches_direct_evaluation() {
        let inst = gnep();
        let g = inst.prepare().unwrap();
        let flat = [0.3, 0.9, 0.6, 0.7];
        let mut obj = g.objective_at(0, &flat);
        // 2z₁ + 2z₂ + 3y₂
        assert!((obj.value(&[1.0, 2.0]).unwrap() - (6.0 + 2.1)).abs() < 1e-12);
        let grad = obj.gradient(&[1.0, 2.0]).unwrap();
        assert!((grad[0] - 2.0).abs() < 1e-6 && (grad[1] - 2.0).abs() < 1e-6);
    }
}
