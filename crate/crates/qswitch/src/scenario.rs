//! JSON scenario files and their conversion to and from the core model.

use std::collections::BTreeMap;
use std::path::Path;

use qswitch_core::design::DesignInputs;
use qswitch_core::numerics::{Matrix, SymmetricPositiveDefinite, Vector};
use qswitch_core::plant::{
    generate_adt_signal, DwellBound, ModeDynamics, ModeId, SignalGenerator, Switch, SwitchedPlant,
    SwitchingSignal,
};
use qswitch_core::simulator::{Scenario, DEFAULT_STEP};
use qswitch_core::QuantizerConfig;
use serde::{Deserialize, Serialize};

use crate::Error;

pub type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub plant: PlantSpec,
    pub design: DesignSpec,
    pub quantizer: QuantizerSpec,
    pub signal: SignalSpec,
    pub sim: SimSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSpec {
    pub modes: Vec<ModeSpec>,
    #[serde(default)]
    pub jumps: Vec<JumpSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub id: u32,
    #[serde(rename = "A")]
    pub a: Rows,
    #[serde(rename = "B")]
    pub b: Rows,
    #[serde(rename = "C")]
    pub c: Rows,
    #[serde(rename = "K")]
    pub k: Rows,
    #[serde(rename = "L")]
    pub l: Rows,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpSpec {
    pub to: u32,
    pub from: u32,
    #[serde(rename = "R")]
    pub r: Rows,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSpec {
    /// `Q_p` keyed by mode id.
    #[serde(rename = "Q")]
    pub q: BTreeMap<u32, Rows>,
    pub kappa: f64,
    pub tau: f64,
    pub tau_bar: f64,
    pub chi: f64,
    #[serde(rename = "N0")]
    pub n0: f64,
    pub tau_a: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantizerSpec {
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "Delta")]
    pub delta: f64,
    #[serde(rename = "Delta0", default, skip_serializing_if = "Option::is_none")]
    pub delta0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalSpec {
    pub initial_mode: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub switches: Option<Vec<SwitchSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generate: Option<GenerateSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwitchSpec {
    pub t: f64,
    pub mode: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateSpec {
    pub tau_a: f64,
    #[serde(rename = "N0")]
    pub n0: f64,
    pub horizon: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    pub x0: Vec<f64>,
    pub horizon: f64,
    #[serde(default = "default_step")]
    pub h: f64,
    /// Zoom floor applied at capture.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

fn default_step() -> f64 {
    DEFAULT_STEP
}

fn matrix(field: &str, rows: &Rows) -> Result<Matrix, Error> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 {
        return Err(Error::Schema(format!("{field}: matrix must be non-empty")));
    }
    if let Some(i) = rows.iter().position(|row| row.len() != c) {
        return Err(Error::Schema(format!(
            "{field}: row {i} has {} entries, row 0 has {c}",
            rows[i].len()
        )));
    }
    Ok(Matrix::from_fn(r, c, |i, j| rows[i][j]))
}

pub fn rows_of(m: &Matrix) -> Rows {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// A loaded scenario: the core model plus the signal seed, if generated.
#[derive(Debug, Clone, PartialEq)]
pub struct Loaded {
    pub scenario: Scenario,
    pub generated_from: Option<GenerateSpec>,
    /// Whether the file spelled out `Delta0` and `alpha`; used to write
    /// them back the same way.
    pub dead_zone_given: bool,
    pub zoom_floor_given: bool,
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self, Error> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn read(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn plant(&self) -> Result<SwitchedPlant, Error> {
        let mut modes = Vec::new();
        for (i, m) in self.plant.modes.iter().enumerate() {
            let f = |name: &str| format!("plant.modes[{i}].{name}");
            let mode = ModeDynamics::new(
                ModeId(m.id),
                matrix(&f("A"), &m.a)?,
                matrix(&f("B"), &m.b)?,
                matrix(&f("C"), &m.c)?,
                matrix(&f("K"), &m.k)?,
                matrix(&f("L"), &m.l)?,
            )
            .map_err(|e| Error::Schema(format!("plant.modes[{i}]: {e}")))?;
            modes.push((ModeId(m.id), mode));
        }
        let mut jumps = Vec::new();
        for (i, j) in self.plant.jumps.iter().enumerate() {
            jumps.push((
                (ModeId(j.to), ModeId(j.from)),
                matrix(&format!("plant.jumps[{i}].R"), &j.r)?,
            ));
        }
        SwitchedPlant::new(modes, jumps).map_err(|e| Error::Schema(format!("plant: {e}")))
    }

    pub fn design_inputs(&self) -> Result<DesignInputs, Error> {
        let d = &self.design;
        let mut weights = BTreeMap::new();
        for (id, rows) in &d.q {
            let q = matrix(&format!("design.Q.{id}"), rows)?;
            let q = SymmetricPositiveDefinite::new(q)
                .map_err(|e| Error::Schema(format!("design.Q.{id}: {e}")))?;
            weights.insert(ModeId(*id), q);
        }
        let p = self.plant.modes.first().map_or(0, |m| m.c.len());
        let q = &self.quantizer;
        let quantizer = QuantizerConfig::new(q.m, q.delta, q.delta0, p)
            .map_err(|e| Error::Schema(format!("quantizer: {e}")))?;
        let dwell =
            DwellBound::new(d.n0, d.tau_a).map_err(|e| Error::Schema(format!("design: {e}")))?;
        Ok(DesignInputs {
            weights,
            kappa: d.kappa,
            quantizer,
            capture_window: d.tau,
            zoom_out_period: d.tau_bar,
            zoom_out_margin: d.chi,
            dwell,
        })
    }

    /// The switching signal, drawing it when the file asks for a generated
    /// one; `seed` overrides the file's seed.
    pub fn signal(&self, plant: &SwitchedPlant, seed: Option<u64>) -> Result<SwitchingSignal, Error> {
        let s = &self.signal;
        let initial = ModeId(s.initial_mode);
        match (&s.switches, &s.generate) {
            (Some(_), Some(_)) => Err(Error::Schema(
                "signal: give either switches or generate, not both".into(),
            )),
            (Some(list), None) => {
                let switches = list
                    .iter()
                    .map(|sw| Switch { time: sw.t, mode: ModeId(sw.mode) })
                    .collect();
                SwitchingSignal::new(initial, switches)
                    .map_err(|e| Error::Schema(format!("signal: {e}")))
            }
            (None, Some(g)) => {
                let spec = SignalGenerator {
                    bound: DwellBound::new(g.n0, g.tau_a)
                        .map_err(|e| Error::Schema(format!("signal.generate: {e}")))?,
                    horizon: g.horizon,
                    seed: seed.unwrap_or(g.seed),
                    initial_mode: Some(initial),
                    grid: Some(self.sim.h),
                };
                generate_adt_signal(&plant.mode_ids(), &spec)
                    .map_err(|e| Error::Schema(format!("signal.generate: {e}")))
            }
            (None, None) => Ok(SwitchingSignal::constant(initial)),
        }
    }

    pub fn load(&self) -> Result<Loaded, Error> {
        self.load_with(None, None, None)
    }

    /// Builds the core scenario, optionally overriding `h`, the horizon and
    /// the generator seed.
    pub fn load_with(
        &self,
        h: Option<f64>,
        horizon: Option<f64>,
        seed: Option<u64>,
    ) -> Result<Loaded, Error> {
        let mut file = self.clone();
        if let Some(h) = h {
            file.sim.h = h;
        }
        if let Some(t) = horizon {
            file.sim.horizon = t;
        }
        let plant = file.plant()?;
        let inputs = file.design_inputs()?;
        let signal = file.signal(&plant, seed)?;
        let x0 = Vector::from_column_slice(&file.sim.x0);
        let mut scenario =
            Scenario::new(plant, inputs, signal, x0, file.sim.horizon, file.sim.h)
                .map_err(|e| Error::Schema(format!("sim: {e}")))?;
        if let Some(alpha) = file.sim.alpha {
            scenario = scenario
                .with_zoom_floor(alpha)
                .map_err(|e| Error::Schema(format!("sim.alpha: {e}")))?;
        }
        Ok(Loaded {
            scenario,
            generated_from: file.signal.generate.map(|g| GenerateSpec {
                seed: seed.unwrap_or(g.seed),
                ..g
            }),
            dead_zone_given: file.quantizer.delta0.is_some(),
            zoom_floor_given: file.sim.alpha.is_some(),
        })
    }

    /// Re-serializes a loaded scenario. Generated signals come back as the
    /// generator block they were drawn from.
    pub fn from_loaded(loaded: &Loaded) -> Self {
        let sc = &loaded.scenario;
        let modes = sc
            .plant
            .modes()
            .map(|(id, m)| ModeSpec {
                id: id.0,
                a: rows_of(m.a()),
                b: rows_of(m.b()),
                c: rows_of(m.c()),
                k: rows_of(m.k()),
                l: rows_of(m.l()),
            })
            .collect();
        let jumps = sc
            .plant
            .jumps()
            .map(|((to, from), r)| JumpSpec { to: to.0, from: from.0, r: rows_of(r) })
            .collect();
        let inputs = &sc.inputs;
        let signal = SignalSpec {
            initial_mode: sc.signal.initial_mode().0,
            switches: match loaded.generated_from {
                Some(_) => None,
                None if sc.signal.switches().is_empty() => None,
                None => Some(
                    sc.signal
                        .switches()
                        .iter()
                        .map(|s| SwitchSpec { t: s.time, mode: s.mode.0 })
                        .collect(),
                ),
            },
            generate: loaded.generated_from,
        };
        let q = &inputs.quantizer;
        ScenarioFile {
            plant: PlantSpec { modes, jumps },
            design: DesignSpec {
                q: inputs
                    .weights
                    .iter()
                    .map(|(id, w)| (id.0, rows_of(w.matrix())))
                    .collect(),
                kappa: inputs.kappa,
                tau: inputs.capture_window,
                tau_bar: inputs.zoom_out_period,
                chi: inputs.zoom_out_margin,
                n0: inputs.dwell.chatter_bound(),
                tau_a: inputs.dwell.average_dwell_time(),
            },
            quantizer: QuantizerSpec {
                m: q.range(),
                delta: q.error_bound(),
                delta0: loaded.dead_zone_given.then(|| q.dead_zone()),
            },
            signal,
            sim: SimSpec {
                x0: sc.x0.iter().copied().collect(),
                horizon: sc.horizon,
                h: sc.h,
                alpha: loaded.zoom_floor_given.then_some(sc.zoom_floor),
            },
        }
    }
}
