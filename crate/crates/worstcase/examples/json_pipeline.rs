//! The machine interface: build a JSON problem spec, reformulate it, solve
//! it, and run the verification suites, exactly as the `worstcase` binary
//! does.
//!
//! Run with `cargo run --example json_pipeline`.

use serde_json::json;
use worstcase::cli::{self, Mode};

fn main() {
    let spec = json!({
        "schema_version": 1,
        "kind": "uq_ot",
        "nominal": {"atoms": [[0.0]], "probs": [1.0]},
        "cost": {"wasserstein": {"p": 1.0, "norm": "l2"}},
        "radius": 0.5,
        "support": {"dim": 1, "constraints": [
            {"atom": "affine", "a": [1.0], "b": -1.0},
            {"atom": "affine", "a": [-1.0], "b": -1.0},
        ]},
        "disutility": {"neg_pieces": [
            {"atom": "affine", "a": [-1.0], "b": 0.0},
            {"atom": "affine", "a": [1.0], "b": 0.0},
        ]},
        "oracle": {"lo": [-1.0], "hi": [1.0], "res": 1e-3},
    })
    .to_string();

    println!("== reformulate (the explicit maximization is the transport default) ==");
    let out = cli::cmd_reformulate(&spec, None);
    let prog = &out.report;
    println!(
        "provenance: {}, blocks: {}, constraints: {}",
        prog["provenance"],
        prog["blocks"].as_array().unwrap().len(),
        prog["constraints"].as_array().unwrap().len()
    );

    println!("\n== solve --mode both ==");
    let out = cli::cmd_solve(&spec, Mode::Both);
    println!("{}", cli::canonical_pretty(&out.report));

    println!("== verify --suite oracle ==");
    let out = cli::cmd_verify(&spec, "oracle", 0);
    for check in out.report["checks"].as_array().unwrap() {
        println!(
            "  [{}] {} -- {}",
            if check["ok"].as_bool().unwrap() { "ok" } else { "FAIL" },
            check["check"],
            check["detail"]
        );
    }
}
