//! Samples a ground-truth SCM, draws a mixed observational and
//! interventional dataset, and saves it to a directory.
//!
//! ```text
//! cargo run --example generate_dataset -- /tmp/bcd-data
//! ```

use std::path::PathBuf;

use latent_bcd::graph_scm::GroundTruthScm;
use latent_bcd::io::{load_dataset, save_dataset, DatasetManifest};
use latent_bcd::sampler::{generate_dataset, DatasetSpec, NodeMode, ValueMode};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> latent_bcd::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("bcd-data"));
    let seed = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let scm = GroundTruthScm::generate(6, 10, 2.0, 0.1, &mut rng)?;
    println!("ground-truth L ({} edges):{}", scm.l_gt.edge_count(), scm.l_gt.matrix());

    let spec = DatasetSpec {
        n_obs: 300,
        n_int: 300,
        node_mode: NodeMode::Multi,
        value_mode: ValueMode::Uniform { lo: -10.0, hi: 10.0 },
        sets: 20,
    };
    let data = generate_dataset(&scm, &spec, &mut rng)?;
    for r in [0, 300, 315] {
        println!("row {r}: targets {:?}", data.labels.row_targets(r));
    }

    let manifest = DatasetManifest {
        d: 6,
        big_d: 10,
        er_edges_per_node: 2.0,
        sigma: 0.1,
        spec,
        seed,
    };
    save_dataset(&out, &data, &scm, &manifest)?;
    let (reloaded, _, _) = load_dataset(&out)?;
    assert_eq!(reloaded.x, data.x);
    println!("saved {} rows to {}", data.n(), out.display());
    Ok(())
}
