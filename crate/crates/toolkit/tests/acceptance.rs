//! One PASS/FAIL line per acceptance criterion, computed through the core
//! API on the shipped configuration.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use pairsource::commands::{run, Command, Context};
use pairsource::reproduce::property_suite;
use pairsource::{load_config, SourceConfig};
use pairsource_core::counting::CountingScenario;
use pairsource_core::dispersion::{ActsOn, ElementRole};
use pairsource_core::phasemap::{optimize_compensators, phase_map, visibility};
use pairsource_core::polarization::qber_from_visibility;
use pairsource_core::spdc::{
    fwhm, joint_spectrum, marginal_spectrum, solve_poling_period, support, CrystalSpec,
    PumpSpectrum,
};

const REFERENCE_POLING_PERIOD_UM: f64 = 3.425;
const POLING_TOLERANCE: f64 = 0.01;
const REFERENCE_DISPLACEMENT_MM: f64 = 1.0;
const DISPLACEMENT_TOLERANCE: f64 = 0.05;
const REFERENCE_DEGENERATE_FWHM_NM: f64 = 14.0;
const FWHM_TOLERANCE: f64 = 0.30;
const REFERENCE_LOBE_FWHM_MAX_NM: f64 = 4.0;
const REFERENCE_SIGNAL_NM: f64 = 780.0;
const REFERENCE_SUPPORT_NM: (f64, f64) = (755.0, 875.0);
const REFERENCE_SUPPORT_SPAN_NM: f64 = 90.0;
const SUPPORT_FRACTION: f64 = 0.01;
const REFERENCE_RATE_RATIO: f64 = 4.0;
const RATE_TOLERANCE: f64 = 0.40;
const REFERENCE_COMPENSATORS_MM: (f64, f64) = (0.78, 0.97);
const COMPENSATOR_TOLERANCE_MM: f64 = 0.15;
const OPTIMIZE_BUDGET_S: f64 = 300.0;
const REFERENCE_DIAGONAL_VISIBILITY: f64 = 0.964;
const VISIBILITY_TOLERANCE: f64 = 0.04;
const VISIBILITY_RANGE: (f64, f64) = (0.92, 1.0);
const REFERENCE_AVERAGE_VISIBILITY: f64 = 0.977;
const REFERENCE_QBER: f64 = 0.0115;
const REFERENCE_BRIGHTNESS_PER_MW: f64 = 0.56e6;
const REFERENCE_EFFICIENCY: f64 = 0.21;
const REFERENCE_GENERATED_RANGE: (f64, f64) = (1.0e10, 1.5e10);

type Outcome = Result<(bool, String), String>;

fn shipped_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/paper_source.json")
}

fn poling_period(cfg: &SourceConfig) -> Outcome {
    let pump = cfg.pump_center_nm;
    let mut worst: f64 = 0.0;
    let mut shown = Vec::new();
    for t in [20.0, 25.0, 30.0, 35.0, 40.0] {
        let p = solve_poling_period(&cfg.crystal().material, pump, 2.0 * pump, t)
            .map_err(|e| e.to_string())?;
        worst = worst.max((p - REFERENCE_POLING_PERIOD_UM).abs() / REFERENCE_POLING_PERIOD_UM);
        shown.push(format!("{p:.4}"));
    }
    Ok((
        worst <= POLING_TOLERANCE,
        format!(
            "{} µm, worst deviation {:.2}%",
            shown.join("/"),
            worst * 100.0
        ),
    ))
}

fn displacement(cfg: &SourceConfig) -> Outcome {
    let t = cfg.crystal().temperature_c;
    let mut out = Vec::new();
    for (acts_on, wavelength) in [
        (ActsOn::Pump, cfg.pump_center_nm),
        (ActsOn::SignalAndIdler, 2.0 * cfg.pump_center_nm),
    ] {
        let e = cfg
            .layout
            .elements
            .iter()
            .find(|e| e.role == ElementRole::WalkOff && e.acts_on == acts_on)
            .ok_or("walk-off element missing")?;
        out.push(
            e.lateral_displacement_mm(wavelength, t)
                .map_err(|e| e.to_string())?,
        );
    }
    let pass = out.iter().all(|d| {
        (d - REFERENCE_DISPLACEMENT_MM).abs() <= DISPLACEMENT_TOLERANCE * REFERENCE_DISPLACEMENT_MM
    });
    Ok((
        pass,
        format!("displacer {:.4} mm, combiner {:.4} mm", out[0], out[1]),
    ))
}

struct Tuned {
    degenerate: CrystalSpec,
    nondegenerate: CrystalSpec,
}

fn tune(cfg: &SourceConfig) -> Result<Tuned, String> {
    let pump = cfg.pump_center_nm;
    let crystal = cfg.crystal();
    let t_deg = crystal
        .solve_degenerate_temperature(pump, (0.0, 150.0))
        .map_err(|e| e.to_string())?;
    let t_nd = crystal
        .solve_temperature_for_signal(pump, REFERENCE_SIGNAL_NM, (t_deg, 150.0))
        .map_err(|e| e.to_string())?;
    Ok(Tuned {
        degenerate: crystal.at_temperature(t_deg),
        nondegenerate: crystal.at_temperature(t_nd),
    })
}

fn narrowband(cfg: &SourceConfig, crystal: &CrystalSpec) -> Result<Vec<(f64, f64)>, String> {
    let line = PumpSpectrum::monochromatic(cfg.pump_center_nm, 1.0).map_err(|e| e.to_string())?;
    let (js, _) =
        joint_spectrum(crystal, &line, &cfg.narrowband_grid).map_err(|e| e.to_string())?;
    Ok(marginal_spectrum(&js))
}

fn degenerate_width(cfg: &SourceConfig, t: &Tuned) -> Outcome {
    let w = fwhm(&narrowband(cfg, &t.degenerate)?).map_err(|e| e.to_string())?;
    let pass =
        (w - REFERENCE_DEGENERATE_FWHM_NM).abs() <= FWHM_TOLERANCE * REFERENCE_DEGENERATE_FWHM_NM;
    Ok((pass, format!("{w:.2} nm")))
}

fn lobe_width(cfg: &SourceConfig, t: &Tuned) -> Outcome {
    let split = 2.0 * cfg.pump_center_nm;
    let lobe: Vec<_> = narrowband(cfg, &t.nondegenerate)?
        .into_iter()
        .filter(|p| p.0 < split)
        .collect();
    let w = fwhm(&lobe).map_err(|e| e.to_string())?;
    Ok((w < REFERENCE_LOBE_FWHM_MAX_NM, format!("{w:.2} nm")))
}

fn broadband_support(cfg: &SourceConfig) -> Outcome {
    let (js, _) =
        joint_spectrum(cfg.crystal(), cfg.pump(), &cfg.grid).map_err(|e| e.to_string())?;
    let (lo, hi) = support(&marginal_spectrum(&js), SUPPORT_FRACTION).ok_or("empty marginal")?;
    let pass = lo >= REFERENCE_SUPPORT_NM.0
        && hi <= REFERENCE_SUPPORT_NM.1
        && hi - lo >= REFERENCE_SUPPORT_SPAN_NM;
    Ok((
        pass,
        format!("[{lo:.2}, {hi:.2}] nm, span {:.2} nm", hi - lo),
    ))
}

fn rate_ratio(cfg: &SourceConfig, t: &Tuned) -> Outcome {
    let band = cfg.rate_band_nm;
    let pump = cfg.pump_center_nm;
    let deg = t
        .degenerate
        .integrated_rate(pump, band)
        .map_err(|e| e.to_string())?;
    let nd = t
        .nondegenerate
        .integrated_rate(pump, band)
        .map_err(|e| e.to_string())?;
    let r = deg / nd;
    Ok((
        (r - REFERENCE_RATE_RATIO).abs() <= RATE_TOLERANCE * REFERENCE_RATE_RATIO,
        format!("{r:.3}"),
    ))
}

fn compensators(cfg: &SourceConfig) -> Outcome {
    let (js, _) =
        joint_spectrum(cfg.crystal(), cfg.pump(), &cfg.grid).map_err(|e| e.to_string())?;
    let started = Instant::now();
    let sol = optimize_compensators(&cfg.layout, &js, cfg.compensator_bounds)
        .map_err(|e| e.to_string())?;
    let elapsed = started.elapsed().as_secs_f64();
    let (rp, rq) = REFERENCE_COMPENSATORS_MM;
    let pass = (sol.pre_mm - rp).abs() <= COMPENSATOR_TOLERANCE_MM
        && (sol.post_mm - rq).abs() <= COMPENSATOR_TOLERANCE_MM
        && elapsed <= OPTIMIZE_BUDGET_S;
    Ok((
        pass,
        format!(
            "({:.3}, {:.3}) mm, V = {:.6}, {elapsed:.2} s",
            sol.pre_mm, sol.post_mm, sol.visibility
        ),
    ))
}

fn visibility_order(cfg: &SourceConfig) -> Outcome {
    let (js, _) =
        joint_spectrum(cfg.crystal(), cfg.pump(), &cfg.grid).map_err(|e| e.to_string())?;
    let v = |layout| {
        phase_map(layout, &cfg.grid)
            .and_then(|pm| visibility(&js, &pm))
            .map_err(|e| e.to_string())
    };
    let actual = v(&cfg.layout)?;
    let (rp, rq) = REFERENCE_COMPENSATORS_MM;
    let design = v(&cfg
        .layout
        .with_compensators(rp, rq)
        .map_err(|e| e.to_string())?)?;
    let pass = actual < design
        && (VISIBILITY_RANGE.0..=VISIBILITY_RANGE.1).contains(&actual)
        && (actual - REFERENCE_DIAGONAL_VISIBILITY).abs() <= VISIBILITY_TOLERANCE;
    Ok((
        pass,
        format!(
            "V(configured) = {actual:.4}, V({rp}/{rq}) = {design:.4}, offset from {REFERENCE_DIAGONAL_VISIBILITY} {:+.4}",
            actual - REFERENCE_DIAGONAL_VISIBILITY
        ),
    ))
}

fn qber() -> Outcome {
    let q = qber_from_visibility(REFERENCE_AVERAGE_VISIBILITY);
    Ok((
        (q - REFERENCE_QBER).abs() < 1e-12 && (0.005..=0.015).contains(&q),
        format!("{q:.5}"),
    ))
}

fn generated_rate() -> Outcome {
    let sc = CountingScenario::from_brightness(
        REFERENCE_BRIGHTNESS_PER_MW,
        1000.0,
        REFERENCE_EFFICIENCY,
        REFERENCE_EFFICIENCY,
        1e-9,
        0.0,
        1,
    )
    .map_err(|e| e.to_string())?;
    let r = sc.generated_pair_rate;
    Ok((
        (REFERENCE_GENERATED_RANGE.0..=REFERENCE_GENERATED_RANGE.1).contains(&r),
        format!("{r:.4e} pairs/s"),
    ))
}

fn byte_identical_reruns(cfg: &SourceConfig) -> Result<bool, String> {
    let dirs = [tempfile::tempdir(), tempfile::tempdir()];
    let mut files = Vec::new();
    for d in &dirs {
        let d = d.as_ref().map_err(|e| e.to_string())?;
        let ctx = Context::new(cfg, d.path()).map_err(|e| e.to_string())?;
        run(&ctx, Command::Simulate).map_err(|e| e.to_string())?;
        files.push(std::fs::read(d.path().join("events.csv")).map_err(|e| e.to_string())?);
    }
    Ok(files[0] == files[1])
}

fn properties(cfg: &SourceConfig) -> Outcome {
    let (js, _) =
        joint_spectrum(cfg.crystal(), cfg.pump(), &cfg.grid).map_err(|e| e.to_string())?;
    let mut failed = property_suite(cfg, &js).map_err(|e| e.to_string())?;
    if !byte_identical_reruns(cfg)? {
        failed.push("byte-identical event files".into());
    }
    if failed.is_empty() {
        Ok((true, "all properties hold".into()))
    } else {
        Ok((false, format!("failed: {}", failed.join(", "))))
    }
}

fn main() -> ExitCode {
    let cfg = match load_config(&shipped_config()) {
        Ok(c) => c,
        Err(e) => {
            println!("FAIL  config  {e}");
            return ExitCode::FAILURE;
        }
    };
    let tuned = tune(&cfg);
    let with_tuning = |f: fn(&SourceConfig, &Tuned) -> Outcome| match &tuned {
        Ok(t) => f(&cfg, t),
        Err(e) => Err(e.clone()),
    };
    let results: Vec<(&str, &str, Outcome)> = vec![
        (
            "1",
            "poling period 3.425 µm ± 1% for 20-40 °C",
            poling_period(&cfg),
        ),
        ("2", "walk-off displacement 1 mm ± 5%", displacement(&cfg)),
        (
            "3a",
            "degenerate FWHM 14 nm ± 30%",
            with_tuning(degenerate_width),
        ),
        ("3b", "780/842 nm lobe FWHM < 4 nm", with_tuning(lobe_width)),
        (
            "4",
            "-20 dB support inside [755, 875] nm, span ≥ 90 nm",
            broadband_support(&cfg),
        ),
        ("5", "rate ratio 4 ± 40%", with_tuning(rate_ratio)),
        (
            "6",
            "compensators (0.78, 0.97) mm ± 0.15 mm in ≤ 300 s",
            compensators(&cfg),
        ),
        (
            "7",
            "V(0.92/1.04) < V(0.78/0.97), in [0.92, 1], 0.964 ± 0.04",
            visibility_order(&cfg),
        ),
        ("8", "QBER 0.0115", qber()),
        (
            "9",
            "generated rate at 1 W in [1.0e10, 1.5e10] pairs/s",
            generated_rate(),
        ),
        ("10", "property suite", properties(&cfg)),
    ];
    let mut all = true;
    for (id, what, outcome) in results {
        let (pass, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
        all &= pass;
        println!(
            "{}  {id:<3} {what}: {detail}",
            if pass { "PASS" } else { "FAIL" }
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
