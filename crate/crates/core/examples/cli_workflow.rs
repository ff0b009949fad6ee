//! The command-line workflow, driven in-process: synth, train, detect,
//! evaluate and burden into a scratch directory.
//!
//! Equivalent shell session:
//!
//!     neoseiz synth    --config run.toml -o corpus
//!     neoseiz train    --config run.toml --data corpus -o train
//!     neoseiz detect   --config run.toml --model train/model.json --data corpus -o detect
//!     neoseiz evaluate --config run.toml --pred detect --truth corpus -o evaluate
//!     neoseiz burden   --config run.toml --pred detect --truth corpus -o burden

use std::fs;

const CONFIG: &str = r#"
seed = 11
bootstrap_iters = 200

[train]
n_folds = 3

[train.search]
c = [10.0]
gamma_scale = [0.1]

[train.calibration]
k = [3]
collar = [0]

[synth]
n_neonates = 4
duration_s = 1800.0
seizure_rate_per_h = 6.0
artifact_rate_per_h = 2.0
"#;

fn main() {
    let root = std::env::temp_dir().join("neoseiz_cli");
    let _ = fs::remove_dir_all(&root);
    fs::create_dir_all(&root).unwrap();
    let cfg = root.join("run.toml");
    fs::write(&cfg, CONFIG).unwrap();
    let p = |name: &str| root.join(name).display().to_string();
    let c = cfg.display().to_string();
    let [corpus, train, model, detect, evaluate, burden] =
        ["corpus", "train", "train/model.json", "detect", "evaluate", "burden"].map(p);

    let steps: [Vec<&str>; 5] = [
        vec!["synth", "-o", &corpus],
        vec!["train", "--data", &corpus, "-o", &train],
        vec!["detect", "--model", &model, "--data", &corpus, "-o", &detect],
        vec!["evaluate", "--pred", &detect, "--truth", &corpus, "-o", &evaluate],
        vec!["burden", "--pred", &detect, "--truth", &corpus, "-o", &burden],
    ];
    for args in steps {
        println!("\n$ neoseiz {}", args.join(" "));
        let code = neoseiz::cli::run(["neoseiz", "--config", &c].into_iter().chain(args.iter().copied()));
        if code != 0 {
            eprintln!("exit status {code}");
            std::process::exit(code);
        }
    }
    println!("\noutputs under {}", root.display());
}
