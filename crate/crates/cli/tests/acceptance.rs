//! One line per acceptance criterion; exits nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::process::Command;
use std::time::{Duration, Instant};

use gemmsim::oracle::{check_case, grid};
use gemmsim::{
    arithmetic_time, default_tiles, estimate, microkernel_menu, register_footprint, sweep,
    CalibrationProfile, ComponentId, GemmShape, MicroKernel, Variant,
};
use gemmsim_cli::{ReportBody, ReportDocument};

const BIN: &str = env!("CARGO_BIN_EXE_gemmsim");

/// Optimal kernels per distinct layer shape: (ids, m, n, k, [B3A2C0, C3B2A0, B3C2A0]).
const TABLE: [(&str, usize, usize, usize, [&str; 3]); 19] = [
    ("1", 32, 12544, 27, ["4x24", "24x4", "8x12"]),
    ("2", 32, 12544, 288, ["4x24", "8x12", "4x24"]),
    ("3", 64, 12544, 32, ["4x24", "24x4", "12x8"]),
    ("4", 64, 3136, 576, ["4x24", "12x8", "4x24"]),
    ("5,7", 128, 3136, 128, ["4x24", "24x4", "4x24"]),
    ("6", 128, 3136, 1152, ["4x24", "12x8", "4x24"]),
    ("8", 128, 784, 1152, ["4x24", "12x8", "4x24"]),
    ("9", 256, 784, 128, ["4x24", "24x4", "8x12"]),
    ("10", 256, 784, 2304, ["4x24", "12x8", "4x24"]),
    ("11", 256, 784, 256, ["4x24", "12x8", "4x20"]),
    ("12", 256, 196, 2304, ["4x24", "12x8", "4x24"]),
    ("13", 512, 196, 256, ["4x24", "24x4", "4x24"]),
    ("14,16,18,20,22", 512, 196, 4608, ["4x24", "12x8", "4x24"]),
    ("15,17,19,21,23", 512, 196, 512, ["4x24", "12x8", "4x24"]),
    ("24", 512, 49, 4608, ["8x12", "12x8", "4x24"]),
    ("25", 1024, 49, 512, ["8x12", "12x8", "4x24"]),
    ("26", 1024, 49, 9216, ["8x12", "12x8", "4x24"]),
    ("27", 1024, 49, 1024, ["8x12", "12x8", "4x24"]),
    ("29", 1024, 1000, 1, ["4x24", "24x4", "24x4"]),
];

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
    notes: Vec<String>,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
        notes: Vec::new(),
    }
}

fn shape(m: usize, n: usize, k: usize) -> GemmShape {
    GemmShape::new(m, n, k).unwrap()
}

fn run_bin(args: &[&str]) -> (Vec<u8>, i32, Duration) {
    let start = Instant::now();
    let out = Command::new(BIN)
        .args(args)
        .env_remove("GEMMSIM_CALIB")
        .output()
        .expect("run gemmsim");
    (out.stdout, out.status.code().unwrap_or(-1), start.elapsed())
}

fn oracle_grid(check_counters: bool) -> Outcome {
    let p = CalibrationProfile::gap8();
    let start = Instant::now();
    let cases = grid(&p, 100, 48, 20_241_014).unwrap();
    let unaligned = cases
        .iter()
        .filter(|c| [c.shape.m, c.shape.n, c.shape.k].iter().any(|d| d % 4 != 0))
        .count();
    let mut bad = Vec::new();
    for c in &cases {
        let o = check_case(&p, c).unwrap();
        let ok = if check_counters {
            o.mismatches.is_empty()
        } else {
            o.correct
        };
        if !ok {
            bad.push(format!("{c:?}"));
        }
    }
    let elapsed = start.elapsed();
    let pass =
        cases.len() == 100 && bad.is_empty() && unaligned > 0 && elapsed < Duration::from_secs(60);
    let what = if check_counters {
        "channel volumes equal"
    } else {
        "exact products"
    };
    let mut o = outcome(
        pass,
        format!(
            "{}/{} cases with {what} ({unaligned} with dims not multiple of 4), {:.2?}",
            cases.len() - bad.len(),
            cases.len(),
            elapsed
        ),
    );
    o.notes = bad.into_iter().take(3).collect();
    o
}

fn criterion_1() -> Outcome {
    oracle_grid(false)
}

fn criterion_2() -> Outcome {
    oracle_grid(true)
}

fn criterion_3() -> Outcome {
    let (stdout, code, elapsed) = run_bin(&["layers", "--format", "json"]);
    let doc = ReportDocument::from_json(std::str::from_utf8(&stdout).unwrap()).unwrap();
    let ReportBody::Layers(layers) = doc.result else {
        return outcome(false, "layers did not produce a layer report");
    };
    let mut by_shape = BTreeMap::new();
    for l in &layers {
        let kernels: Vec<String> = Variant::ALL
            .iter()
            .map(|&v| {
                l.cell(v)
                    .map(|c| c.kernel.to_string())
                    .unwrap_or_else(|e| e.to_owned())
            })
            .collect();
        by_shape.insert((l.layer.m, l.layer.n, l.layer.k), kernels);
    }

    let mut matched = 0;
    let mut layer10 = false;
    let mut notes = Vec::new();
    for (ids, m, n, k, expect) in TABLE {
        let Some(got) = by_shape.get(&(m, n, k)) else {
            notes.push(format!("layer {ids}: missing from output"));
            continue;
        };
        let row_ok = got.iter().zip(expect).all(|(g, e)| g == e);
        if row_ok {
            matched += 1;
        } else {
            notes.push(format!(
                "layer {ids} ({m}x{n}x{k}): got {} / {} / {}, table {} / {} / {}",
                got[0], got[1], got[2], expect[0], expect[1], expect[2]
            ));
        }
        if ids == "10" {
            layer10 = row_ok;
        }
    }
    let pass = code == 0 && layer10 && matched >= 16 && elapsed < Duration::from_secs(10);
    let mut o = outcome(
        pass,
        format!(
            "{} distinct shapes, {matched}/19 rows match (need >= 16), layer 10 exact: {layer10}, {:.2?}",
            by_shape.len(),
            elapsed
        ),
    );
    if !pass {
        notes.push(
            "divergence: the cost model is implemented as specified; no tie-break or write-back rate \
             choice within it recovers the table (exploratory search over the three write-back rates \
             reaches at most 6 of 19 rows). For layer 10, 4x24 needs one more outer block than 4x20 \
             (kc = 16384/nr in B3A2C0, nc = 16384/kr in B3C2A0), and re-streaming the \
             register-resident operand from main memory costs more than the wider kernel saves."
                .into(),
        );
    }
    o.notes = notes;
    o
}

fn criterion_4() -> Outcome {
    let p = CalibrationProfile::gap8();
    let menu = microkernel_menu(Variant::B3A2C0, &p);
    let has = |a, b| menu.contains(&MicroKernel::new(a, b));
    let required = [
        (4, 4),
        (4, 8),
        (4, 12),
        (4, 20),
        (4, 24),
        (8, 12),
        (12, 8),
        (24, 4),
    ];
    let excluded = [(4, 28), (28, 4), (16, 8)];
    let missing: Vec<_> = required.iter().filter(|&&(a, b)| !has(a, b)).collect();
    let present: Vec<_> = excluded.iter().filter(|&&(a, b)| has(a, b)).collect();
    let f = |a, b| register_footprint(Variant::B3A2C0, MicroKernel::new(a, b), 4).unwrap();
    let (f424, f244) = (f(4, 24), f(24, 4));
    let pass = missing.is_empty() && present.is_empty() && f424 == 31 && f244 == 31;
    outcome(
        pass,
        format!(
            "{} kernels; missing {missing:?}, wrongly present {present:?}; footprints 4x24={f424} 24x4={f244}",
            menu.len()
        ),
    )
}

fn criterion_5() -> Outcome {
    let p = CalibrationProfile::gap8();
    let s = shape(256, 784, 2304);
    let (k4, k8) = (MicroKernel::new(4, 4), MicroKernel::new(4, 8));
    // Tiles derived for nr=8 are also valid for nr=4.
    let t = default_tiles(Variant::B3A2C0, s, k8, &p).unwrap();
    let t4 = estimate(&p, Variant::B3A2C0, s, k4, t)
        .unwrap()
        .seconds(ComponentId::PackM);
    let t8 = estimate(&p, Variant::B3A2C0, s, k8, t)
        .unwrap()
        .seconds(ComponentId::PackM);
    outcome(
        t8 == t4 / 2.0,
        format!("pack B: nr=4 {t4} s, nr=8 {t8} s, ratio {}", t4 / t8),
    )
}

fn criterion_6() -> Outcome {
    let p = CalibrationProfile::gap8();
    let s = shape(256, 784, 2304);
    let expected = 2.0 * 256.0 * 784.0 * 2304.0 / 5.64e9;
    let mut constant = true;
    let mut count = 0;
    for v in Variant::ALL {
        for e in &sweep(&p, v, s).unwrap().entries {
            constant &= e.breakdown.arithmetic_seconds == arithmetic_time(&p, s);
            count += 1;
        }
    }
    let got = arithmetic_time(&p, s);
    let pass = constant && (got - expected).abs() < 1e-15 && (got - 0.1640).abs() <= 0.0001;
    outcome(
        pass,
        format!("{count} configurations, arithmetic {got:.6} s (target 0.1640 +/- 0.0001)"),
    )
}

fn criterion_7() -> Outcome {
    let p = CalibrationProfile::gap8();
    let s = shape(256, 784, 2304);
    let best = |v| sweep(&p, v, s).unwrap().best().kernel;
    let (a, b, c) = (
        best(Variant::B3A2C0),
        best(Variant::C3B2A0),
        best(Variant::B3C2A0),
    );
    let squarish = [MicroKernel::new(8, 12), MicroKernel::new(12, 8)];
    let pass = a.second > a.first && c.second > c.first && squarish.contains(&b);
    outcome(
        pass,
        format!("layer 10 optima: B3A2C0 {a}, C3B2A0 {b}, B3C2A0 {c}"),
    )
}

fn criterion_8() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for args in [
        &["layers", "--format", "json"][..],
        &[
            "verify",
            "--max-dim",
            "24",
            "--cases",
            "100",
            "--seed",
            "7",
            "--format",
            "json",
        ][..],
    ] {
        let (first, c1, _) = run_bin(args);
        let (second, c2, _) = run_bin(args);
        let text = String::from_utf8(first.clone()).unwrap();
        let reserialized = ReportDocument::from_json(&text).unwrap().to_json().unwrap();
        let ok = c1 == 0 && c2 == 0 && !first.is_empty() && first == second && reserialized == text;
        pass &= ok;
        parts.push(format!(
            "{} {}",
            args[0],
            if ok { "identical" } else { "DIFFERS" }
        ));
    }
    outcome(pass, parts.join(", "))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("oracle correctness", criterion_1),
        ("analytic = oracle", criterion_2),
        ("optimal kernels per layer", criterion_3),
        ("micro-kernel menu", criterion_4),
        ("pack rate scaling", criterion_5),
        ("arithmetic invariance", criterion_6),
        ("layer 10 shape preference", criterion_7),
        ("determinism", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] criterion {}: {name}: {}", i + 1, o.detail);
        for note in &o.notes {
            println!("       {note}");
        }
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
