use imbench_core::datagen::{grid_cell, sample_dataset};
use imbench_core::forest::{fit_forest, importance, ForestAlgo, ForestConfig, ImportanceMeasure};
use std::time::Instant;

fn main() {
    let spec = grid_cell(1000, 0.5, 42);
    let ds = sample_dataset(&spec).unwrap();
    let train: Vec<usize> = (0..700).collect();
    let sub = ds.subset(&train);
    for algo in [ForestAlgo::Cart, ForestAlgo::Cif] {
        let t0 = Instant::now();
        let cfg = ForestConfig { n_trees: 500, algo, seed: 1, ..Default::default() };
        let model = fit_forest(&sub, &cfg).unwrap();
        let fit_time = t0.elapsed();
        let t1 = Instant::now();
        let measure = match algo { ForestAlgo::Cart => ImportanceMeasure::PermAccuracy, ForestAlgo::Cif => ImportanceMeasure::PermAuc };
        let rep = importance(&model, &sub, measure).unwrap();
        let imp_time = t1.elapsed();
        println!("{:?}: fit 500 trees {:.2?}, importance {:.2?}, top value {:.4}", algo, fit_time, imp_time, rep.values.iter().cloned().fold(f64::MIN, f64::max));
        if matches!(algo, ForestAlgo::Cart) {
            let t2 = Instant::now();
            let _ = importance(&model, &sub, ImportanceMeasure::Gini).unwrap();
            println!("  gini importance {:.2?}", t2.elapsed());
        }
    }
}
