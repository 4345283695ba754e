//! TOML experiment configs: schema, parsing, and whole-config validation.
//! Validation reports every problem it finds, not just the first, so a bad
//! config can be fixed in one pass.

use dfgp_core::game::GameConstants;
use dfgp_core::{
    admissible_accuracy_max, builtin, builtin_names, EstimatorKind, FeasibleSet, GameSpec,
    GuaranteeVariant, PlayerSet, PolyFamily,
};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};

/// Which subcommand a config is meant for. Optional in the file; when
/// present it must match the invoked subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Run,
    Restart,
    Verify,
    Sweep,
    Certify,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Mode::Run => "run",
            Mode::Restart => "restart",
            Mode::Verify => "verify",
            Mode::Sweep => "sweep",
            Mode::Certify => "certify",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    pub game: GameConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<RunSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restart: Option<RestartSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSection>,
}

/// Either a named built-in game or a full polynomial family: quadratic
/// coupling `matrix` (row-major over the stacked dimensions), linear
/// `offset`, per-player `quartic` own-term coefficients and constant cost
/// `shift`, plus one `[[game.players]]` table per player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quartic: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub players: Vec<PlayerConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<ConstantsConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlayerConfig {
    /// "ball", "box", or "ball-box".
    pub kind: String,
    /// Coordinate count; required for balls, inferred from the half-widths
    /// otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_widths: Option<Vec<f64>>,
}

/// Partial override of the game's declared constants; omitted fields keep
/// the derived (or built-in) values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ConstantsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jacobian_lipschitz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_star: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimator: Option<EstimatorKind>,
    /// Target accuracy; mutually exclusive with (`delta`, `horizon`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Which guarantee the accuracy targets when `epsilon` is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<GuaranteeVariant>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicates: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Fixed step size; replaces the default inverse-time schedule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    /// Record every k-th step; mutually exclusive with `record_per_decade`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_every: Option<u64>,
    /// Record on a logarithmic grid with this many points per decade.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_per_decade: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RestartSection {
    /// Radius shrink fraction per stage, in (0, 1).
    pub q: f64,
    pub stages: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicates: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    /// Smoothing radius the checks probe at; chosen automatically from the
    /// game's admissible ranges when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub draws: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probes: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<u64>,
    /// Fraction of the monotonicity modulus conceded to smoothing, in (0, 1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monotonicity_margin: Option<f64>,
    /// Accuracy at which the horizon-scaling check evaluates the chooser.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub epsilons: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<GuaranteeVariant>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicates: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

/// Failure to obtain a valid config: unreadable file, malformed TOML (this
/// is what names unknown keys), or a well-formed file whose contents fail
/// validation.
#[derive(Debug)]
pub enum ConfigError {
    Io(std::io::Error),
    Parse(toml::de::Error),
    Invalid(Vec<String>),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io(e) => write!(f, "cannot read config: {e}"),
            ConfigError::Parse(e) => write!(f, "config is not valid TOML: {e}"),
            ConfigError::Invalid(errors) => {
                writeln!(f, "config failed validation with {} error(s):", errors.len())?;
                for e in errors {
                    writeln!(f, "  - {e}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for ConfigError {}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(ConfigError::Io)?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(ConfigError::Parse)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Builds the configured game, reporting every problem found. The game
    /// must exist before run parameters can be validated, since admissible
    /// ranges depend on its constants and feasible set.
    pub fn build_game(&self) -> Result<GameSpec, Vec<String>> {
        let mut errors = Vec::new();
        let g = &self.game;
        let custom_fields = g.matrix.is_some()
            || g.offset.is_some()
            || g.quartic.is_some()
            || g.shift.is_some()
            || !g.players.is_empty()
            || g.name.is_some();
        let base = match (&g.builtin, custom_fields) {
            (Some(_), true) => {
                errors.push(
                    "[game] must give either a builtin name or a custom family, not both".into(),
                );
                None
            }
            (None, false) => {
                errors.push(format!(
                    "[game] is empty; give builtin = one of {:?} or a custom family",
                    builtin_names()
                ));
                None
            }
            (Some(name), false) => match builtin(name) {
                Some(game) => Some(game),
                None => {
                    errors.push(format!(
                        "unknown builtin game {name:?}; available: {:?}",
                        builtin_names()
                    ));
                    None
                }
            },
            (None, true) => self.build_custom_game(&mut errors),
        };
        let base = match base {
            Some(b) if errors.is_empty() => b,
            _ => return Err(errors),
        };
        match &g.constants {
            None => Ok(base),
            Some(over) => {
                let d = base.constants();
                let merged = GameConstants {
                    alpha: over.alpha.unwrap_or(d.alpha),
                    beta: over.beta.unwrap_or(d.beta),
                    jacobian_lipschitz: over.jacobian_lipschitz.unwrap_or(d.jacobian_lipschitz),
                    f_star: over.f_star.unwrap_or(d.f_star),
                };
                base.with_constants(merged)
                    .map_err(|e| vec![format!("[game.constants]: {e}")])
            }
        }
    }

    fn build_custom_game(&self, errors: &mut Vec<String>) -> Option<GameSpec> {
        let g = &self.game;
        if g.players.is_empty() {
            errors.push("custom games need at least one [[game.players]] table".into());
        }
        let mut players = Vec::new();
        let mut dims = Vec::new();
        for (i, p) in g.players.iter().enumerate() {
            match build_player(p) {
                Ok((set, dim)) => {
                    players.push(set);
                    dims.push(dim);
                }
                Err(e) => errors.push(format!("[[game.players]] entry {i}: {e}")),
            }
        }
        if players.len() != g.players.len() {
            return None;
        }
        let set = match FeasibleSet::new(players, dims) {
            Ok(s) => s,
            Err(e) => {
                errors.push(format!("[game] players: {e}"));
                return None;
            }
        };
        let d = set.total_dim();
        let n = set.n_players();
        let matrix = match &g.matrix {
            Some(m) => {
                if m.len() != d * d {
                    errors.push(format!(
                        "[game] matrix has {} entries but the players stack to total \
                         dimension {d}, so {} are needed (row-major)",
                        m.len(),
                        d * d
                    ));
                }
                m.clone()
            }
            None => {
                errors.push("[game] custom family needs a matrix".into());
                Vec::new()
            }
        };
        let offset = match &g.offset {
            Some(b) => {
                if b.len() != d {
                    errors.push(format!(
                        "[game] offset has {} entries, expected the total dimension {d}",
                        b.len()
                    ));
                }
                b.clone()
            }
            None => vec![0.0; d],
        };
        let per_player = |field: &Option<Vec<f64>>, what: &str, errors: &mut Vec<String>| match field
        {
            Some(v) => {
                if v.len() != n {
                    errors.push(format!(
                        "[game] {what} has {} entries, expected one per player ({n})",
                        v.len()
                    ));
                }
                v.clone()
            }
            None => vec![0.0; n],
        };
        let quartic = per_player(&g.quartic, "quartic", errors);
        let shift = per_player(&g.shift, "shift", errors);
        if !errors.is_empty() {
            return None;
        }
        let family = PolyFamily {
            name: g.name.clone().unwrap_or_else(|| "custom".into()),
            matrix,
            offset,
            quartic,
            shift,
            set,
        };
        match family.build() {
            Ok(game) => Some(game),
            Err(e) => {
                errors.push(format!("[game]: {e}"));
                None
            }
        }
    }

    /// Full validation for a subcommand: builds the game, then checks the
    /// section the mode needs against the game's admissible ranges. Returns
    /// the game on success and the complete error list otherwise.
    pub fn validate_for(&self, mode: Mode) -> Result<GameSpec, Vec<String>> {
        let mut errors = Vec::new();
        if let Some(declared) = self.mode {
            if declared != mode {
                errors.push(format!(
                    "config declares mode = \"{declared}\" but the {mode} subcommand was invoked"
                ));
            }
        }
        let game = match self.build_game() {
            Ok(g) => Some(g),
            Err(mut e) => {
                errors.append(&mut e);
                None
            }
        };
        if let Some(game) = &game {
            match mode {
                Mode::Run => self.check_run_section(game, &mut errors),
                Mode::Sweep => self.check_sweep_section(game, &mut errors),
                Mode::Restart => self.check_restart_section(&mut errors),
                Mode::Verify => self.check_verify_section(game, &mut errors),
                Mode::Certify => {}
            }
        }
        match (game, errors.is_empty()) {
            (Some(g), true) => Ok(g),
            (_, _) => Err(errors),
        }
    }

    fn check_run_section(&self, game: &GameSpec, errors: &mut Vec<String>) {
        let Some(run) = &self.run else {
            errors.push("run mode needs a [run] section".into());
            return;
        };
        let explicit = run.delta.is_some() || run.horizon.is_some();
        match (run.epsilon, explicit) {
            (Some(eps), true) => {
                errors.push(
                    "[run] must give exactly one of epsilon or (delta, horizon); both are set"
                        .into(),
                );
                if let Some(delta) = run.delta {
                    check_delta(game, delta, "[run] delta", errors);
                }
                check_epsilon(game, eps, "[run] epsilon", errors);
            }
            (None, false) => errors.push(
                "[run] must give exactly one of epsilon or (delta, horizon); neither is set"
                    .into(),
            ),
            (None, true) => {
                if run.delta.is_none() || run.horizon.is_none() {
                    errors.push(
                        "[run] explicit parameterization needs both delta and horizon".into(),
                    );
                }
                if let Some(delta) = run.delta {
                    check_delta(game, delta, "[run] delta", errors);
                }
            }
            (Some(eps), false) => check_epsilon(game, eps, "[run] epsilon", errors),
        }
        if let Some(eta) = run.eta {
            if !(eta > 0.0 && eta.is_finite()) {
                errors.push(format!("[run] eta must be positive and finite, got {eta}"));
            }
        }
        if run.record_every.is_some() && run.record_per_decade.is_some() {
            errors.push("[run] record_every and record_per_decade are mutually exclusive".into());
        }
        if let Some(r) = run.replicates {
            if r == 0 {
                errors.push("[run] replicates must be at least 1".into());
            }
        }
        if let Some(x0) = &run.x0 {
            if x0.len() != game.total_dim() {
                errors.push(format!(
                    "[run] x0 has {} coordinates, expected {}",
                    x0.len(),
                    game.total_dim()
                ));
            }
        }
    }

    fn check_sweep_section(&self, game: &GameSpec, errors: &mut Vec<String>) {
        let Some(sweep) = &self.sweep else {
            errors.push("sweep mode needs a [sweep] section".into());
            return;
        };
        if sweep.epsilons.is_empty() {
            errors.push("[sweep] epsilons must be nonempty".into());
        }
        for (i, &eps) in sweep.epsilons.iter().enumerate() {
            check_epsilon(game, eps, &format!("[sweep] epsilons[{i}]"), errors);
        }
        if let Some(r) = sweep.replicates {
            if r == 0 {
                errors.push("[sweep] replicates must be at least 1".into());
            }
        }
    }

    fn check_restart_section(&self, errors: &mut Vec<String>) {
        let Some(restart) = &self.restart else {
            errors.push("restart mode needs a [restart] section".into());
            return;
        };
        if !(restart.q > 0.0 && restart.q < 1.0) {
            errors.push(format!(
                "[restart] q must lie strictly between 0 and 1, got {}",
                restart.q
            ));
        }
        if restart.stages == 0 {
            errors.push("[restart] stages must be at least 1".into());
        }
        if let Some(r) = restart.replicates {
            if r == 0 {
                errors.push("[restart] replicates must be at least 1".into());
            }
        }
    }

    fn check_verify_section(&self, game: &GameSpec, errors: &mut Vec<String>) {
        // The section itself is optional: every knob has a default.
        let Some(v) = &self.verify else { return };
        let margin = v.monotonicity_margin.unwrap_or(DEFAULT_MONOTONICITY_MARGIN);
        if !(margin > 0.0 && margin < 1.0) {
            errors.push(format!(
                "[verify] monotonicity_margin must lie strictly between 0 and 1, got {margin}"
            ));
        } else if let Some(delta) = v.delta {
            check_delta(game, delta, "[verify] delta", errors);
            let mono = dfgp_core::monotonicity_radius_limit(game, margin);
            if delta > mono {
                errors.push(format!(
                    "[verify] delta {delta} exceeds the monotonicity-check limit {mono:.6e} \
                     at margin {margin}"
                ));
            }
            let shift = dfgp_core::equilibrium_radius_limit(game);
            if delta >= shift {
                errors.push(format!(
                    "[verify] delta {delta} is outside the equilibrium-shift range (0, {shift:.6e})"
                ));
            }
        }
        for (val, what) in [
            (v.draws, "draws"),
            (v.probes, "probes"),
            (v.pairs, "pairs"),
        ] {
            if val == Some(0) {
                errors.push(format!("[verify] {what} must be at least 1"));
            }
        }
        if let Some(eps) = v.epsilon {
            check_epsilon(game, eps, "[verify] epsilon", errors);
        }
    }
}

pub const DEFAULT_MONOTONICITY_MARGIN: f64 = 0.5;

fn check_delta(game: &GameSpec, delta: f64, what: &str, errors: &mut Vec<String>) {
    let r = game.set().inner_radius();
    if !(delta > 0.0 && delta < r) {
        errors.push(format!(
            "{what} = {delta} rejected: radius δ ∈ (0, r) is required, with r = {r} here"
        ));
    }
}

fn check_epsilon(game: &GameSpec, eps: f64, what: &str, errors: &mut Vec<String>) {
    if !(eps > 0.0 && eps.is_finite()) {
        errors.push(format!("{what} must be positive and finite, got {eps}"));
        return;
    }
    let max = admissible_accuracy_max(game);
    if eps >= max {
        errors.push(format!(
            "{what} = {eps} is out of range: the target accuracy must lie below the \
             admissible maximum {max:.6e} for this game"
        ));
    }
}

fn build_player(p: &PlayerConfig) -> Result<(PlayerSet, usize), String> {
    let set = match p.kind.as_str() {
        "ball" => {
            let radius = p.radius.ok_or("ball players need a radius")?;
            if p.half_widths.is_some() {
                return Err("ball players take no half_widths".into());
            }
            PlayerSet::Ball { radius }
        }
        "box" => {
            let half_widths = p
                .half_widths
                .clone()
                .ok_or("box players need half_widths")?;
            if p.radius.is_some() {
                return Err("box players take no radius".into());
            }
            PlayerSet::Box { half_widths }
        }
        "ball-box" => PlayerSet::BallBox {
            radius: p.radius.ok_or("ball-box players need a radius")?,
            half_widths: p
                .half_widths
                .clone()
                .ok_or("ball-box players need half_widths")?,
        },
        other => return Err(format!("unknown set kind {other:?}; use ball, box, or ball-box")),
    };
    let dim = match (set.dim(), p.dim) {
        (Some(d), None) => d,
        (Some(d), Some(given)) if d == given => d,
        (Some(d), Some(given)) => {
            return Err(format!(
                "dim = {given} conflicts with the {d} half-widths given"
            ))
        }
        (None, Some(given)) if given > 0 => given,
        (None, _) => return Err("ball players need an explicit dim".into()),
    };
    Ok((set, dim))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [game]
        builtin = "lq-rate"

        [run]
        delta = 0.1
        horizon = 100
    "#;

    #[test]
    fn minimal_builtin_config_parses_and_validates() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        let game = cfg.validate_for(Mode::Run).unwrap();
        assert_eq!(game.name(), "lq-rate");
    }

    #[test]
    fn round_trip_preserves_the_config() {
        let cfg = ExperimentConfig::from_toml(
            r#"
            mode = "run"

            [game]
            name = "pair"
            matrix = [1.0, 0.25, -0.25, 1.0]
            offset = [0.1, -0.1]
            quartic = [0.0, 0.0]
            shift = [0.5, 0.5]

            [[game.players]]
            kind = "box"
            half_widths = [1.0]

            [[game.players]]
            kind = "ball"
            dim = 1
            radius = 1.0

            [game.constants]
            f_star = 9.0

            [run]
            estimator = "two-point"
            epsilon = 0.5
            variant = "both-guarantees"
            replicates = 4
            seed = 7
            record_per_decade = 10
            x0 = [0.5, -0.5]

            [output]
            dir = "results"
        "#,
        )
        .unwrap();
        let text = cfg.to_toml();
        let reparsed = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(cfg, reparsed);
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = ExperimentConfig::from_toml(
            r#"
            [game]
            builtin = "lq-rate"
            flavor = "spicy"
        "#,
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("flavor"), "message: {msg}");
    }

    #[test]
    fn radius_at_or_above_inner_radius_is_rejected_with_the_documented_phrase() {
        let toml = r#"
            [game]
            builtin = "lq-rate"

            [run]
            delta = 1.0
            horizon = 10
        "#;
        let cfg = ExperimentConfig::from_toml(toml).unwrap();
        let errors = cfg.validate_for(Mode::Run).unwrap_err();
        assert_eq!(errors.len(), 1, "{errors:?}");
        assert!(errors[0].contains("radius δ ∈ (0, r)"), "{}", errors[0]);
    }

    #[test]
    fn oversized_accuracy_echoes_the_admissible_maximum() {
        let cfg = ExperimentConfig::from_toml(
            r#"
            [game]
            builtin = "lq-rate"

            [run]
            epsilon = 1e6
        "#,
        )
        .unwrap();
        let game = cfg.build_game().unwrap();
        let max = admissible_accuracy_max(&game);
        let errors = cfg.validate_for(Mode::Run).unwrap_err();
        assert_eq!(errors.len(), 1, "{errors:?}");
        assert!(
            errors[0].contains(&format!("{max:.6e}")),
            "expected the admissible maximum {max:.6e} in: {}",
            errors[0]
        );
    }

    #[test]
    fn all_validation_errors_are_collected_not_just_the_first() {
        let cfg = ExperimentConfig::from_toml(
            r#"
            mode = "verify"

            [game]
            builtin = "lq-rate"

            [run]
            epsilon = 0.01
            delta = 2.0
            horizon = 10
            replicates = 0
            x0 = [1.0, 2.0, 3.0]
        "#,
        )
        .unwrap();
        let errors = cfg.validate_for(Mode::Run).unwrap_err();
        // Mode mismatch, epsilon-and-explicit conflict, bad delta, zero
        // replicates, and an x0 of the wrong length: five independent
        // problems, all reported at once.
        assert_eq!(errors.len(), 5, "{errors:#?}");
    }

    #[test]
    fn custom_game_with_inconsistent_matrix_is_rejected() {
        let cfg = ExperimentConfig::from_toml(
            r#"
            [game]
            matrix = [1.0, 0.0, 0.0]
            offset = [0.0]

            [[game.players]]
            kind = "box"
            half_widths = [1.0, 1.0]

            [run]
            delta = 0.1
            horizon = 10
        "#,
        )
        .unwrap();
        let errors = cfg.validate_for(Mode::Run).unwrap_err();
        assert!(errors[0].contains("matrix has 3 entries"), "{errors:?}");
        assert!(errors[0].contains('4'), "{errors:?}");
    }

    #[test]
    fn builtin_and_custom_fields_conflict() {
        let cfg = ExperimentConfig::from_toml(
            r#"
            [game]
            builtin = "lq-rate"
            matrix = [1.0]
        "#,
        )
        .unwrap();
        let errors = cfg.build_game().unwrap_err();
        assert!(errors[0].contains("not both"), "{errors:?}");
    }

    #[test]
    fn constants_override_merges_with_derived_values() {
        let cfg = ExperimentConfig::from_toml(
            r#"
            [game]
            builtin = "lq-rate"

            [game.constants]
            f_star = 2.5
        "#,
        )
        .unwrap();
        let game = cfg.build_game().unwrap();
        let base = builtin("lq-rate").unwrap().constants();
        let got = game.constants();
        assert_eq!(got.f_star, 2.5);
        assert_eq!(got.alpha, base.alpha);
        assert_eq!(got.beta, base.beta);
    }

    #[test]
    fn custom_two_player_game_builds_and_certifies() {
        let cfg = ExperimentConfig::from_toml(
            r#"
            [game]
            name = "pair"
            matrix = [1.0, 0.25, -0.25, 1.0]
            offset = [0.0, 0.0]

            [[game.players]]
            kind = "box"
            half_widths = [1.0]

            [[game.players]]
            kind = "box"
            half_widths = [1.0]
        "#,
        )
        .unwrap();
        let game = cfg.build_game().unwrap();
        assert_eq!(game.n_players(), 2);
        let report = dfgp_core::certify(&game, 60, 3).unwrap();
        assert!(report.passed(), "{report:#?}");
    }

    #[test]
    fn mode_mismatch_is_reported() {
        let mut cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        cfg.mode = Some(Mode::Sweep);
        let errors = cfg.validate_for(Mode::Run).unwrap_err();
        assert!(errors[0].contains("sweep"), "{errors:?}");
        assert!(errors[0].contains("run subcommand"), "{errors:?}");
    }
}
