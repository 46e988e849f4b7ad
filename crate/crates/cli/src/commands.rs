use std::path::Path;

use serde::Serialize;

use ssvep_core::filterbank::FilterBank;
use ssvep_core::fusion::ParamGrid;
use ssvep_core::synthetic::quadrature_phases;
use ssvep_core::{
    build_templates, compare_methods, evaluate_loocv, extract_window, generate_ssvep, grid_search,
    read_dataset, recognize as recognize_epoch, write_dataset, write_results_csv, Error, EvalReport,
    Method, Mixing, Result, SsvepDataset, SynthSpec,
};

use crate::{BenchArgs, GridArgs, InspectArgs, MethodArg, MixingArg, RecognizeArgs, SynthArgs};

fn load(path: &Path) -> Result<SsvepDataset> {
    read_dataset(path).map_err(|e| match e {
        Error::Io(io) => Error::Io(std::io::Error::new(
            io.kind(),
            format!("{}: {io}", path.display()),
        )),
        other => other,
    })
}

pub fn synth(a: SynthArgs) -> Result<()> {
    let frequencies_hz = a.freqs.0;
    let phases_rad = match a.phases {
        Some(p) => p.0,
        None => quadrature_phases(frequencies_hz.len()),
    };
    let spec = SynthSpec {
        frequencies_hz,
        phases_rad,
        n_channels: a.channels,
        n_trials: a.trials,
        duration_s: a.dur,
        sample_rate_hz: a.fs,
        n_harmonics: a.harmonics,
        snr_db: a.snr,
        seed: a.seed,
        mixing: match a.mixing {
            MixingArg::Random => Mixing::Random,
            MixingArg::Identity => Mixing::Identity,
        },
    };
    let data = generate_ssvep(&spec)?;
    write_dataset(&data, &a.out)?;
    let d = data.dims();
    println!(
        "wrote {}: shape ({}, {}, {}, {}) seed {}",
        a.out.display(),
        d.n_channels,
        d.n_samples,
        d.n_trials,
        d.n_freqs,
        a.seed
    );
    Ok(())
}

fn print_reports(reports: &[EvalReport]) {
    println!(
        "{:<16} {:>8} {:>9} {:>8} {:>10} {:>9}",
        "method", "window_s", "accuracy", "stderr", "itr_bpm", "correct"
    );
    for r in reports {
        let row = &r.rows[0];
        println!(
            "{:<16} {:>8.3} {:>9.3} {:>8.3} {:>10.2} {:>5}/{}",
            r.method.as_str(),
            r.window_s,
            r.accuracy(),
            r.standard_error(),
            row.itr_bits_per_min,
            row.n_correct,
            row.n_total
        );
    }
}

pub fn bench(a: BenchArgs) -> Result<()> {
    let data = load(&a.data)?;
    let params = a.params.params();
    let start = a.start.unwrap_or(data.visual_latency_s());
    let windows = a.windows.0;
    if windows.is_empty() {
        return Err(Error::Argument("no windows given".into()));
    }
    let subject = a.subject.unwrap_or_else(|| {
        a.data
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into())
    });

    let reports = match a.method {
        MethodArg::Both => compare_methods(&data, &params, &windows, start)?,
        single => {
            let method = if single == MethodArg::Proposed {
                Method::ProposedFusion
            } else {
                Method::BaselineSscca
            };
            windows
                .iter()
                .map(|w| evaluate_loocv(&data, method, &params, *w, start))
                .collect::<Result<Vec<_>>>()?
        }
    };
    let reports: Vec<EvalReport> = reports.into_iter().map(|r| r.with_subject(&subject)).collect();
    print_reports(&reports);

    let rows: Vec<_> = reports.iter().flat_map(|r| r.rows.iter().cloned()).collect();
    write_results_csv(&rows, &a.out)?;
    Ok(())
}

#[derive(Serialize)]
struct GridRow {
    a1: f64,
    b1: f64,
    a2: f64,
    b2: f64,
    accuracy: f64,
}

pub fn gridsearch(a: GridArgs) -> Result<()> {
    let data = load(&a.data)?;
    let base = a.params.params();
    let start = a.start.unwrap_or(data.visual_latency_s());
    let grids = ParamGrid {
        a1: a.a1_grid.0,
        b1: a.b1_grid.0,
        a2: a.a2_grid.0,
        b2: a.b2_grid.0,
    };
    let outcome = grid_search(&data, &grids, &base, a.window, start)?;

    let mut w = csv::Writer::from_path(&a.out)?;
    for (p, acc) in &outcome.table {
        w.serialize(GridRow {
            a1: p.a1,
            b1: p.b1,
            a2: p.a2,
            b2: p.b2,
            accuracy: *acc,
        })?;
    }
    w.flush()?;

    let b = outcome.best;
    println!(
        "best a1={} b1={} a2={} b2={} accuracy={:.4} ({} tuples)",
        b.a1,
        b.b1,
        b.a2,
        b.b2,
        outcome.best_accuracy,
        outcome.table.len()
    );
    Ok(())
}

#[derive(Serialize)]
struct Decision {
    chosen_index: usize,
    chosen_hz: f64,
    psi: Vec<f64>,
}

pub fn recognize(a: RecognizeArgs) -> Result<()> {
    let data = load(&a.data)?;
    let d = data.dims();
    if a.trial >= d.n_trials || a.freq >= d.n_freqs {
        return Err(Error::Argument(format!(
            "record (trial {}, freq {}) outside {} trials x {} frequencies",
            a.trial, a.freq, d.n_trials, d.n_freqs
        )));
    }
    let params = a.params.params();
    let start = a.start.unwrap_or(data.visual_latency_s());
    let train: Vec<usize> = (0..d.n_trials).filter(|t| *t != a.trial).collect();
    let window = ssvep_core::templates::window_range(&data, start, a.window)?;
    let bank = build_templates(&data, &train, window)?;
    let z = extract_window(&data, a.trial, a.freq, start, a.window)?;
    let scores = recognize_epoch(&z, &bank, data.base_frequency_hz(), &params)?;
    let out = Decision {
        chosen_index: scores.chosen,
        chosen_hz: data.stim_frequencies_hz()[scores.chosen],
        psi: scores.psi,
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&out).expect("decision serializes")
    );
    Ok(())
}

pub fn inspect(a: InspectArgs) -> Result<()> {
    let data = load(&a.data)?;
    let d = data.dims();
    println!("file:          {}", a.data.display());
    println!(
        "shape:         {} channels x {} samples x {} trials x {} frequencies",
        d.n_channels, d.n_samples, d.n_trials, d.n_freqs
    );
    println!("sample rate:   {} Hz", data.sample_rate_hz());
    println!("latency:       {} s", data.visual_latency_s());
    println!("channels:      {}", data.channel_labels().join(" "));
    let freqs: Vec<String> = data.stim_frequencies_hz().iter().map(|f| format!("{f}")).collect();
    println!("frequencies:   {}", freqs.join(" "));
    let phases: Vec<String> = data.stim_phases_rad().iter().map(|p| format!("{p:.4}")).collect();
    println!("phases (rad):  {}", phases.join(" "));
    if a.filters {
        let fs = data.sample_rate_hz();
        let bank = FilterBank::with_defaults(data.base_frequency_hz(), 5, fs)?;
        println!("filterbank (order 12, 3 dB ripple):");
        for (spec, f) in bank.specs().iter().zip(bank.filters()) {
            let center = (spec.low_hz * spec.high_hz).sqrt();
            println!(
                "  {:>6.2}-{:.0} Hz  center {:6.2} dB  1 Hz {:8.2} dB  max |pole| {:.6}",
                spec.low_hz,
                spec.high_hz,
                f.magnitude_db(center, fs),
                f.magnitude_db(1.0, fs),
                f.max_pole_radius()
            );
        }
    }
    Ok(())
}
