//! Space-resonance loci of the cubic interaction classes at requested
//! output frequencies. Emits `resonances.csv`, `resonances.json`, and the
//! manifest.

use capwave_core::dispersion::{resonance_locus, PhaseSignature, ResonancePoint, Sign};
use capwave_core::error::Result;
use serde::{Deserialize, Serialize};

use crate::artifact::Cell;
use crate::config::{parse_vec2, ConstantsBlock};
use crate::scenarios::{emitter_for, golden_check, resolve_config, CommonArgs};

#[derive(clap::Args, Serialize, Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
pub struct ResonanceMapConfig {
    /// Output frequencies "x,y"; repeatable.
    #[arg(long = "xi", default_values_t = vec!["0.3,0".to_string()])]
    pub xi: Vec<String>,
    /// Comma-separated class filter (S1..S4); empty selects nothing and
    /// produces a valid empty report.
    #[arg(long, default_value = "S1,S2,S3,S4")]
    pub classes: String,
    #[command(flatten)]
    pub constants: ConstantsBlock,
}

#[derive(Serialize)]
struct LabeledPoint {
    xi: [f64; 2],
    signs: String,
    point: ResonancePoint,
}

fn sign_char(s: Sign) -> char {
    match s {
        Sign::Plus => '+',
        Sign::Minus => '-',
    }
}

pub fn run(common: &CommonArgs, flags: &ResonanceMapConfig) -> Result<()> {
    let cfg = resolve_config(common, flags)?;
    let wanted: Vec<&str> = cfg
        .classes
        .split(',')
        .map(str::trim)
        .filter(|c| !c.is_empty())
        .collect();
    let signs = [Sign::Plus, Sign::Minus];
    let mut points = Vec::new();
    for raw in &cfg.xi {
        let xi = parse_vec2(raw)?;
        for tau in signs {
            for kappa in signs {
                for iota in signs {
                    let sig = PhaseSignature::cubic(tau, kappa, iota);
                    let point = resonance_locus(&sig, xi)?;
                    if !wanted.contains(&point.class) {
                        continue;
                    }
                    let label: String =
                        [tau, kappa, iota].into_iter().map(sign_char).collect();
                    points.push(LabeledPoint {
                        xi,
                        signs: label,
                        point,
                    });
                }
            }
        }
    }

    let rows: Vec<Vec<Cell>> = points
        .iter()
        .map(|p| {
            vec![
                Cell::F(p.xi[0]),
                Cell::F(p.xi[1]),
                Cell::S(p.signs.clone()),
                Cell::S(p.point.class.to_string()),
                Cell::F(p.point.eta[0]),
                Cell::F(p.point.eta[1]),
                Cell::F(p.point.sigma[0]),
                Cell::F(p.point.sigma[1]),
                Cell::F(p.point.phase),
            ]
        })
        .collect();

    #[derive(Serialize)]
    struct Summary<'a> {
        points: &'a [LabeledPoint],
        config: &'a ResonanceMapConfig,
    }

    let mut em = emitter_for(common, "resonance-map")?;
    em.write_csv(
        "resonances.csv",
        &[
            "xi_x", "xi_y", "signs", "class", "eta_x", "eta_y", "sigma_x", "sigma_y", "phase",
        ],
        &rows,
    )?;
    em.write_json(
        "resonances.json",
        &Summary {
            points: &points,
            config: &cfg,
        },
    )?;
    let out_dir = em.out_dir().to_path_buf();
    em.finish("resonance-map", &cfg)?;
    golden_check(common, &out_dir)
}
