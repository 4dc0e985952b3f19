//! Named prediction methods, their hyper-parameter grids and the fitted-model union.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::alignment::{MoveCostScheme, SearchBudget};
use crate::discovery::{inductive_miner, tree_to_net};
use crate::eventlog::{Alphabet, SequenceDatabase, Symbol};
use crate::petrinet::load_pnml;
use crate::petripredict::{CreditMode, PetriMode, PetriPredictor, PetriPredictorConfig};
use crate::predictors::{
    AbstractionKind, ActiveLeZi, AkomModel, HmmConfig, HmmModel, MarkovModel, NextSymbolDistribution, PredictError,
    Predictor, ProbabilisticAutomaton, ProportionalBaseline, RandomBaseline, Regularizer,
};

fn default_max_iters() -> usize {
    100
}

fn default_tol() -> f64 {
    1e-6
}

fn default_restarts() -> usize {
    3
}

fn default_iterations() -> usize {
    10_000
}

fn default_alpha() -> f64 {
    0.5
}

/// Where a Petri-net method gets its model from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum NetSource {
    /// Inductive Miner on the training data; `noise = 0` is plain IM.
    Discover {
        #[serde(default)]
        noise: f64,
    },
    Pnml { path: PathBuf },
}

impl Default for NetSource {
    fn default() -> Self {
        NetSource::Discover { noise: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum MethodSpec {
    Random,
    Proportional,
    Markov {
        order: usize,
    },
    Akom {
        k_max: usize,
    },
    Hmm {
        ratio: f64,
        #[serde(default = "no_regularizer")]
        regularizer: Regularizer,
        #[serde(default = "default_max_iters")]
        max_iters: usize,
        #[serde(default = "default_tol")]
        tol: f64,
        #[serde(default = "default_restarts")]
        restarts: usize,
    },
    ActiveLezi,
    Automaton {
        kind: AbstractionKind,
        k: usize,
    },
    PetriUniform {
        #[serde(default)]
        net: NetSource,
        #[serde(default = "default_iterations")]
        iterations: usize,
    },
    PetriEmpirical {
        #[serde(default)]
        net: NetSource,
        #[serde(default = "default_iterations")]
        iterations: usize,
        #[serde(default = "default_alpha")]
        alpha: f64,
        #[serde(default)]
        credit: CreditMode,
    },
}

fn no_regularizer() -> Regularizer {
    Regularizer::None
}

impl MethodSpec {
    pub fn is_petri(&self) -> bool {
        matches!(self, MethodSpec::PetriUniform { .. } | MethodSpec::PetriEmpirical { .. })
    }

    /// Compact `key=value` rendering of the hyper-parameters.
    pub fn params(&self) -> String {
        let net = |n: &NetSource| match n {
            NetSource::Discover { noise } => format!("net=im:{noise}"),
            NetSource::Pnml { path } => format!("net={}", path.display()),
        };
        match self {
            MethodSpec::Random | MethodSpec::Proportional | MethodSpec::ActiveLezi => String::new(),
            MethodSpec::Markov { order } => format!("order={order}"),
            MethodSpec::Akom { k_max } => format!("k_max={k_max}"),
            MethodSpec::Hmm { ratio, regularizer, .. } => {
                let reg = match regularizer {
                    Regularizer::None => "none".to_string(),
                    Regularizer::Additive(e) => format!("additive:{e}"),
                };
                format!("ratio={ratio};regularizer={reg}")
            }
            MethodSpec::Automaton { kind, k } => format!("kind={kind};k={k}"),
            MethodSpec::PetriUniform { net: n, iterations } => format!("{};K={iterations}", net(n)),
            MethodSpec::PetriEmpirical { net: n, iterations, alpha, credit } => {
                let credit = match credit {
                    CreditMode::All => "all",
                    CreditMode::Strict => "strict",
                };
                format!("{};K={iterations};alpha={alpha};credit={credit}", net(n))
            }
        }
    }

    /// Fits the method; `seed` drives HMM initialization and Monte Carlo walks.
    pub fn fit(&self, train: &SequenceDatabase, alphabet: &Alphabet, seed: u64) -> Result<FittedModel, PredictError> {
        Ok(match self {
            MethodSpec::Random => FittedModel::Random(RandomBaseline::new(alphabet)?),
            MethodSpec::Proportional => FittedModel::Proportional(ProportionalBaseline::fit(train, alphabet)?),
            MethodSpec::Markov { order } => FittedModel::Markov(MarkovModel::fit(train, alphabet, *order)?),
            MethodSpec::Akom { k_max } => FittedModel::Akom(AkomModel::fit(train, alphabet, *k_max)?),
            MethodSpec::Hmm { ratio, regularizer, max_iters, tol, restarts } => {
                if ratio.is_nan() || *ratio <= 0.0 {
                    return Err(PredictError::InvalidParameter(format!("HMM state ratio {ratio}")));
                }
                let config = HmmConfig {
                    n_states: HmmConfig::states_for_ratio(*ratio, alphabet.len()),
                    regularizer: *regularizer,
                    max_iters: *max_iters,
                    tol: *tol,
                    restarts: *restarts,
                    seed,
                };
                FittedModel::Hmm(HmmModel::fit(train, alphabet, &config)?)
            }
            MethodSpec::ActiveLezi => FittedModel::ActiveLezi(ActiveLeZi::fit(train, alphabet)?),
            MethodSpec::Automaton { kind, k } => {
                FittedModel::Automaton(ProbabilisticAutomaton::build(train, alphabet, *kind, *k)?)
            }
            MethodSpec::PetriUniform { net, iterations } => {
                let config = PetriPredictorConfig { mode: PetriMode::Uniform, iterations: *iterations, seed, ..Default::default() };
                FittedModel::Petri(Box::new(fit_petri(net, train, alphabet, config)?))
            }
            MethodSpec::PetriEmpirical { net, iterations, alpha, credit } => {
                let config = PetriPredictorConfig {
                    mode: PetriMode::Empirical,
                    iterations: *iterations,
                    seed,
                    alpha: *alpha,
                    credit: *credit,
                    ..Default::default()
                };
                FittedModel::Petri(Box::new(fit_petri(net, train, alphabet, config)?))
            }
        })
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            MethodSpec::Random => "random",
            MethodSpec::Proportional => "proportional",
            MethodSpec::Markov { .. } => "markov",
            MethodSpec::Akom { .. } => "akom",
            MethodSpec::Hmm { .. } => "hmm",
            MethodSpec::ActiveLezi => "active-lezi",
            MethodSpec::Automaton { .. } => "automaton",
            MethodSpec::PetriUniform { .. } => "petri-uniform",
            MethodSpec::PetriEmpirical { .. } => "petri-empirical",
        };
        let params = self.params();
        if params.is_empty() {
            f.write_str(name)
        } else {
            write!(f, "{name}({params})")
        }
    }
}

fn fit_petri(
    net: &NetSource,
    train: &SequenceDatabase,
    alphabet: &Alphabet,
    config: PetriPredictorConfig,
) -> Result<PetriPredictor, PredictError> {
    let apn = match net {
        NetSource::Discover { noise } => tree_to_net(&inductive_miner(train, *noise)),
        NetSource::Pnml { path } => {
            load_pnml(path).map_err(|e| PredictError::InvalidParameter(format!("{}: {e}", path.display())))?
        }
    };
    PetriPredictor::fit(apn, train, alphabet, config, MoveCostScheme::default(), SearchBudget::default())
}

/// Hyper-parameter axes. Configurations enumerate the Cartesian product
/// with the axes in field order, the first axis varying slowest.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub order: Option<Vec<usize>>,
    pub k_max: Option<Vec<usize>>,
    pub kind: Option<Vec<AbstractionKind>>,
    pub k: Option<Vec<usize>>,
    pub ratio: Option<Vec<f64>>,
    pub regularizer: Option<Vec<Regularizer>>,
}

impl GridSpec {
    /// The usual search space for each tunable method.
    pub fn default_for(spec: &MethodSpec) -> Option<GridSpec> {
        let one_to_19: Vec<usize> = (1..=19).collect();
        match spec {
            MethodSpec::Markov { .. } => Some(GridSpec { order: Some(one_to_19), ..Default::default() }),
            MethodSpec::Akom { .. } => Some(GridSpec { k_max: Some(one_to_19), ..Default::default() }),
            MethodSpec::Automaton { .. } => Some(GridSpec {
                kind: Some(vec![AbstractionKind::Seq, AbstractionKind::Mult, AbstractionKind::Set]),
                k: Some(one_to_19),
                ..Default::default()
            }),
            MethodSpec::Hmm { .. } => Some(GridSpec {
                ratio: Some(vec![0.1, 0.5, 1.0, 1.5, 2.0, 3.0, 5.0]),
                regularizer: Some(vec![Regularizer::None, Regularizer::Additive(1e-2), Regularizer::Additive(1e-1)]),
                ..Default::default()
            }),
            _ => None,
        }
    }

    /// Expands the grid around `base`.
    pub fn configurations(&self, base: &MethodSpec) -> Result<Vec<MethodSpec>, PredictError> {
        if base.is_petri() {
            return Err(PredictError::InvalidParameter(format!("{base} does not support grid search")));
        }
        let mut out = vec![base.clone()];
        macro_rules! axis {
            ($field:ident, $pat:pat => $target:expr) => {
                if let Some(values) = &self.$field {
                    if values.is_empty() {
                        return Err(PredictError::InvalidParameter(format!("empty grid axis `{}`", stringify!($field))));
                    }
                    let mut next = Vec::with_capacity(out.len() * values.len());
                    for spec in &out {
                        for v in values {
                            let mut s = spec.clone();
                            match &mut s {
                                $pat => *$target = v.clone(),
                                _ => {
                                    return Err(PredictError::InvalidParameter(format!(
                                        "grid axis `{}` does not apply to {base}",
                                        stringify!($field)
                                    )))
                                }
                            }
                            next.push(s);
                        }
                    }
                    out = next;
                }
            };
        }
        axis!(order, MethodSpec::Markov { order } => order);
        axis!(k_max, MethodSpec::Akom { k_max } => k_max);
        axis!(kind, MethodSpec::Automaton { kind, .. } => kind);
        axis!(k, MethodSpec::Automaton { k, .. } => k);
        axis!(ratio, MethodSpec::Hmm { ratio, .. } => ratio);
        axis!(regularizer, MethodSpec::Hmm { regularizer, .. } => regularizer);
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "model", rename_all = "kebab-case")]
pub enum FittedModel {
    Random(RandomBaseline),
    Proportional(ProportionalBaseline),
    Markov(MarkovModel),
    Akom(AkomModel),
    Hmm(HmmModel),
    ActiveLezi(ActiveLeZi),
    Automaton(ProbabilisticAutomaton),
    Petri(Box<PetriPredictor>),
}

impl FittedModel {
    fn inner(&self) -> &dyn Predictor {
        match self {
            FittedModel::Random(m) => m,
            FittedModel::Proportional(m) => m,
            FittedModel::Markov(m) => m,
            FittedModel::Akom(m) => m,
            FittedModel::Hmm(m) => m,
            FittedModel::ActiveLezi(m) => m,
            FittedModel::Automaton(m) => m,
            FittedModel::Petri(m) => m.as_ref(),
        }
    }
}

impl Predictor for FittedModel {
    fn alphabet(&self) -> &Alphabet {
        self.inner().alphabet()
    }

    fn predict(&self, prefix: &[Symbol]) -> Result<NextSymbolDistribution, PredictError> {
        self.inner().predict(prefix)
    }

    fn predict_batch(&self, prefixes: &[&[Symbol]]) -> Result<Vec<NextSymbolDistribution>, PredictError> {
        self.inner().predict_batch(prefixes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_expansion_order() {
        let base = MethodSpec::Automaton { kind: AbstractionKind::Seq, k: 1 };
        let grid = GridSpec {
            kind: Some(vec![AbstractionKind::Set, AbstractionKind::Mult]),
            k: Some(vec![1, 2, 3]),
            ..Default::default()
        };
        let configs = grid.configurations(&base).unwrap();
        let names: Vec<String> = configs.iter().map(MethodSpec::params).collect();
        assert_eq!(
            names,
            ["kind=set;k=1", "kind=set;k=2", "kind=set;k=3", "kind=mult;k=1", "kind=mult;k=2", "kind=mult;k=3"]
        );
        let bad = GridSpec { order: Some(vec![1]), ..Default::default() };
        assert!(bad.configurations(&base).is_err());
        let empty = GridSpec { k: Some(vec![]), ..Default::default() };
        assert!(empty.configurations(&base).is_err());
        assert!(GridSpec::default().configurations(&MethodSpec::PetriUniform { net: NetSource::default(), iterations: 1 }).is_err());
    }

    #[test]
    fn default_grids_have_the_usual_sizes() {
        let akom = GridSpec::default_for(&MethodSpec::Akom { k_max: 1 }).unwrap();
        assert_eq!(akom.configurations(&MethodSpec::Akom { k_max: 1 }).unwrap().len(), 19);
        let pa = MethodSpec::Automaton { kind: AbstractionKind::Seq, k: 1 };
        assert_eq!(GridSpec::default_for(&pa).unwrap().configurations(&pa).unwrap().len(), 57);
        let hmm: MethodSpec = toml::from_str("method = \"hmm\"\nratio = 1.0").unwrap();
        assert_eq!(GridSpec::default_for(&hmm).unwrap().configurations(&hmm).unwrap().len(), 21);
        assert!(GridSpec::default_for(&MethodSpec::Random).is_none());
    }

    #[test]
    fn specs_parse_from_toml() {
        let spec: MethodSpec = toml::from_str("method = \"automaton\"\nkind = \"set\"\nk = 2").unwrap();
        assert_eq!(spec, MethodSpec::Automaton { kind: AbstractionKind::Set, k: 2 });
        let spec: MethodSpec = toml::from_str("method = \"petri-empirical\"\nnet = { source = \"discover\", noise = 0.2 }").unwrap();
        assert_eq!(spec.to_string(), "petri-empirical(net=im:0.2;K=10000;alpha=0.5;credit=all)");
        let spec: MethodSpec = toml::from_str("method = \"hmm\"\nratio = 0.5\nregularizer = { kind = \"additive\", epsilon = 0.01 }").unwrap();
        assert_eq!(spec.params(), "ratio=0.5;regularizer=additive:0.01");
    }

    #[test]
    fn every_method_fits_and_predicts() {
        let db = SequenceDatabase::from_counts(&[("a b c", 3), ("a c b", 2), ("b a", 1)]);
        let alphabet = db.alphabet();
        let specs: Vec<MethodSpec> = [
            "method = \"random\"",
            "method = \"proportional\"",
            "method = \"markov\"\norder = 2",
            "method = \"akom\"\nk_max = 3",
            "method = \"hmm\"\nratio = 1.0",
            "method = \"active-lezi\"",
            "method = \"automaton\"\nkind = \"mult\"\nk = 2",
            "method = \"petri-uniform\"\niterations = 500",
            "method = \"petri-empirical\"\niterations = 500",
        ]
        .iter()
        .map(|s| toml::from_str(s).unwrap())
        .collect();
        for spec in specs {
            let model = spec.fit(&db, &alphabet, 1).unwrap();
            let d = model.predict(crate::eventlog::Sequence::parse("a b").symbols()).unwrap();
            d.validate().unwrap();
        }
    }
}
