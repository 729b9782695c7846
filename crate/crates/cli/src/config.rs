use std::fs;
use std::path::Path;

use keyphrase_core::jlsd::JlsdConfig;

use crate::args::HyperArgs;
use crate::failure::{Failure, Outcome};

/// Defaults, then the config file, then flags.
pub fn resolve(file: Option<&Path>, seed: Option<u64>, hyper: &HyperArgs) -> Outcome<JlsdConfig> {
    let mut cfg = match file {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| Failure::config(format!("{}: {e}", path.display())))?
        }
        None => JlsdConfig::default(),
    };
    macro_rules! apply {
        ($($field:ident),*) => {
            $(if let Some(v) = hyper.$field { cfg.$field = v; })*
        };
    }
    apply!(
        iterations, ratio, batch_size, lr_lower, lr_upper, eval_every, patience, embed_dim,
        hidden_dim, min_count
    );
    if hyper.source_iterations.is_some() {
        cfg.source_iterations = hyper.source_iterations;
    }
    if hyper.source_per_epoch.is_some() {
        cfg.source_per_epoch = hyper.source_per_epoch;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Flags that reproduce `cfg` exactly, independent of any config file.
pub fn to_flags(cfg: &JlsdConfig) -> Vec<String> {
    let mut flags = vec![
        ("--iterations", cfg.iterations.to_string()),
        ("--ratio", cfg.ratio.to_string()),
        ("--batch-size", cfg.batch_size.to_string()),
        ("--lr-lower", cfg.lr_lower.to_string()),
        ("--lr-upper", cfg.lr_upper.to_string()),
        ("--eval-every", cfg.eval_every.to_string()),
        ("--patience", cfg.patience.to_string()),
        ("--seed", cfg.seed.to_string()),
        ("--embed-dim", cfg.embed_dim.to_string()),
        ("--hidden-dim", cfg.hidden_dim.to_string()),
        ("--min-count", cfg.min_count.to_string()),
    ];
    if let Some(v) = cfg.source_iterations {
        flags.push(("--source-iterations", v.to_string()));
    }
    if let Some(v) = cfg.source_per_epoch {
        flags.push(("--source-per-epoch", v.to_string()));
    }
    flags
        .into_iter()
        .flat_map(|(k, v)| [k.to_string(), v])
        .collect()
}
