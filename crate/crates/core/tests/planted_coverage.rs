// Planted prevalences should sit inside 99% binomial intervals around the
// observed ones for nearly every (seed, group, flag) cell.
use vdamage_core::stats::{stratify, Flag, Group};
use vdamage_core::synth::{gen_cohort, SynthCohortSpec};

fn wilson(count: usize, n: usize, z: f64) -> (f64, f64) {
    let n = n as f64;
    let p = count as f64 / n;
    let centre = (p + z * z / (2.0 * n)) / (1.0 + z * z / n);
    let half = z / (1.0 + z * z / n) * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt();
    (centre - half, centre + half)
}

#[test]
fn planted_prevalences_are_recovered_across_seeds() {
    let spec = SynthCohortSpec {
        n_individuals: 2000,
        videos_per_individual: 1,
        ..SynthCohortSpec::default()
    };
    let (mut covered, mut total) = (0usize, 0usize);
    for seed in 0..50 {
        let cohort = gen_cohort(&spec, seed).unwrap();
        let report = stratify(&cohort.individuals, &cohort.planted_labels()).unwrap();
        for g in Group::ALL {
            for f in Flag::ALL {
                let planted = spec.groups[g.index()].flag_prevalence[f.index()];
                let p = report.prevalence(g, f);
                let (lo, hi) = wilson(p.count, p.n, 2.576);
                total += 1;
                covered += usize::from((lo..=hi).contains(&planted));
            }
        }
    }
    let rate = covered as f64 / total as f64;
    assert!(rate >= 0.97, "covered {covered}/{total}");
}
