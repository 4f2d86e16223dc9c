use std::fmt::Write;

use klsda::klsda::ModelFile;

/// `index,channel,time_index,value` rows for the nonzeros of direction `j`.
pub fn beta_csv(model: &ModelFile, j: usize) -> String {
    let mut out = String::from("index,channel,time_index,value\n");
    let sv = &model.beta[j];
    let mut entries: Vec<(usize, f64)> = sv
        .indices
        .iter()
        .copied()
        .zip(sv.values.iter().copied())
        .collect();
    entries.sort_by_key(|e| e.0);
    for (i, v) in entries {
        if v == 0.0 {
            continue;
        }
        let (ch, t) = split_index(model, i);
        writeln!(out, "{i},{ch},{t},{v}").unwrap();
    }
    out
}

fn split_index(model: &ModelFile, i: usize) -> (usize, usize) {
    let nt = model.n_times.max(1);
    (i / nt, i % nt)
}

/// Stem plot of direction `j` over the feature index, one stem per nonzero.
pub fn beta_svg(model: &ModelFile, j: usize) -> String {
    let (w, h, margin) = (900.0, 320.0, 40.0);
    let p = model.p.max(1) as f64;
    let sv = &model.beta[j];
    let nnz = sv.values.iter().filter(|v| **v != 0.0).count();
    let vmax = sv.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = if vmax > 0.0 {
        (h / 2.0 - margin) / vmax
    } else {
        0.0
    };
    let base = h / 2.0;
    let x_of = |i: usize| margin + (w - 2.0 * margin) * (i as f64 + 0.5) / p;

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    )
    .unwrap();
    let title = format!("{} direction {} ({nnz} nonzeros)", model.config_id, j + 1);
    writeln!(s, "<title>{title}</title>").unwrap();
    writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-family="sans-serif" font-size="14">{title}</text>"#,
        w / 2.0
    )
    .unwrap();
    for ch in 1..model.n_channels {
        let x = x_of(ch * model.n_times) - 0.5 * (w - 2.0 * margin) / p;
        writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{margin}" x2="{x:.2}" y2="{}" stroke="#dddddd"/>"##,
            h - margin
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<line x1="{margin}" y1="{base}" x2="{}" y2="{base}" stroke="black"/>"#,
        w - margin
    )
    .unwrap();
    for (&i, &v) in sv.indices.iter().zip(&sv.values) {
        if v == 0.0 {
            continue;
        }
        let x = x_of(i);
        let y = base - v * scale;
        writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{base}" x2="{x:.2}" y2="{y:.2}" stroke="#1f77b4"/><circle cx="{x:.2}" cy="{y:.2}" r="2" fill="#1f77b4"/>"##
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}
