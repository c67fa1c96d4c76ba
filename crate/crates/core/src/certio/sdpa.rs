//! Sparse SDPA text format.
//!
//! ```text
//! m
//! nBlocks
//! blockStruct
//! b_1 … b_m
//! matno block i j value      (1-based, i ≤ j)
//! ```
//!
//! SDPA solvers maximize `F₀•Y` subject to `F_j•Y = b_j`, so matrix 0
//! holds `-C` and matrices `1..=m` hold the constraint rows. A nonzero
//! objective offset and analytic-center mode are carried in `*` comment
//! lines ahead of the data, which SDPA readers skip.

use std::io::{BufRead, Write};

use rug::Float;

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::mp;
use crate::sdp::{BlockSpec, Constraint, SdpProblem, SolveMode};

fn fmt(x: &Float, digits: usize) -> String {
    mp::to_sci(x, digits)
}

/// Writes `problem` in sparse SDPA format, with enough digits to read every
/// coefficient back bit-exactly at the problem's precision.
pub fn export_problem(problem: &SdpProblem, out: &mut impl Write) -> Result<()> {
    problem.validate()?;
    let digits = mp::round_trip_digits(problem.prec());
    if !problem.offset.is_zero() {
        writeln!(out, "* offset {}", fmt(&problem.offset, digits))?;
    }
    if problem.mode == SolveMode::AnalyticCenter {
        writeln!(out, "* mode analytic-center")?;
    }
    writeln!(out, "{}", problem.constraints.len())?;
    writeln!(out, "{}", problem.blocks.len())?;
    let sizes: Vec<String> = problem.blocks.iter().map(|b| b.size.to_string()).collect();
    writeln!(out, "{}", sizes.join(" "))?;
    let rhs: Vec<String> = problem.constraints.iter().map(|c| fmt(&c.rhs, digits)).collect();
    writeln!(out, "{}", rhs.join(" "))?;
    let write_block = |out: &mut dyn Write, matno: usize, block: usize, m: &Mat, negate: bool| -> Result<()> {
        for i in 0..m.rows() {
            for j in i..m.cols() {
                let v = &m[(i, j)];
                if v.is_zero() {
                    continue;
                }
                let v = if negate { Float::with_val(v.prec(), -v) } else { v.clone() };
                writeln!(out, "{matno} {} {} {} {}", block + 1, i + 1, j + 1, fmt(&v, digits))?;
            }
        }
        Ok(())
    };
    for (b, c) in problem.costs.iter().enumerate() {
        write_block(out, 0, b, c, true)?;
    }
    for (j, row) in problem.constraints.iter().enumerate() {
        for (b, a) in &row.terms {
            write_block(out, j + 1, *b, a, false)?;
        }
    }
    Ok(())
}

pub fn problem_to_string(problem: &SdpProblem) -> Result<String> {
    let mut buf = Vec::new();
    export_problem(problem, &mut buf)?;
    Ok(String::from_utf8(buf).expect("ascii output"))
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, column: 1, message: message.into() }
}

/// Reads a sparse SDPA file at `prec` bits. Row labels become `row{j}`.
pub fn read_problem(source: impl BufRead, prec: u32) -> Result<SdpProblem> {
    let mut offset = Float::new(prec);
    let mut mode = SolveMode::Minimize;
    let mut data: Vec<(usize, String)> = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(c) = t.strip_prefix('*').or_else(|| t.strip_prefix('"')) {
            let c = c.trim();
            if let Some(v) = c.strip_prefix("offset") {
                offset = mp::parse(prec, v.trim()).ok_or_else(|| parse_err(idx + 1, "bad offset"))?;
            } else if c == "mode analytic-center" {
                mode = SolveMode::AnalyticCenter;
            }
            continue;
        }
        // SDPA allows `{`, `}`, `(`, `)` and commas as separators
        let cleaned: String = t.chars().map(|ch| if "{}(),".contains(ch) { ' ' } else { ch }).collect();
        data.push((idx + 1, cleaned));
    }
    let mut it = data.into_iter();
    let mut next_line = |what: &str| it.next().ok_or_else(|| parse_err(0, format!("missing {what}")));
    let (ln, l) = next_line("constraint count")?;
    let m: usize = l.split_whitespace().next().and_then(|s| s.parse().ok()).ok_or_else(|| parse_err(ln, "bad constraint count"))?;
    let (ln, l) = next_line("block count")?;
    let nb: usize = l.split_whitespace().next().and_then(|s| s.parse().ok()).ok_or_else(|| parse_err(ln, "bad block count"))?;
    let (ln, l) = next_line("block structure")?;
    let sizes: Vec<usize> = l
        .split_whitespace()
        .take(nb)
        .map(|s| s.parse::<i64>().map(|v| v.unsigned_abs() as usize))
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| parse_err(ln, "bad block structure"))?;
    if sizes.len() != nb {
        return Err(Error::DimensionMismatch { line: ln, expected: nb, found: sizes.len() });
    }
    let (ln, l) = next_line("right-hand side")?;
    let rhs: Vec<Float> = l
        .split_whitespace()
        .map(|s| mp::parse(prec, s).ok_or_else(|| parse_err(ln, format!("bad number '{s}'"))))
        .collect::<Result<_>>()?;
    if rhs.len() != m {
        return Err(Error::DimensionMismatch { line: ln, expected: m, found: rhs.len() });
    }
    let mut mats: Vec<Vec<Mat>> = (0..=m).map(|_| sizes.iter().map(|&n| Mat::zeros(prec, n, n)).collect()).collect();
    let mut touched = vec![vec![false; nb]; m + 1];
    for (ln, l) in it {
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() != 5 {
            return Err(Error::DimensionMismatch { line: ln, expected: 5, found: f.len() });
        }
        let idx = |s: &str| s.parse::<usize>().map_err(|_| parse_err(ln, format!("bad index '{s}'")));
        let (matno, block, i, j) = (idx(f[0])?, idx(f[1])?, idx(f[2])?, idx(f[3])?);
        if matno > m || block == 0 || block > nb || i == 0 || j == 0 || i > sizes[block - 1] || j > sizes[block - 1] {
            return Err(parse_err(ln, "index out of range"));
        }
        let mut v = mp::parse(prec, f[4]).ok_or_else(|| parse_err(ln, format!("bad number '{}'", f[4])))?;
        if matno == 0 {
            v = -v;
        }
        let mat = &mut mats[matno][block - 1];
        mat[(i - 1, j - 1)] = v.clone();
        mat[(j - 1, i - 1)] = v;
        touched[matno][block - 1] = true;
    }
    let mut mats = mats.into_iter();
    let costs = mats.next().expect("objective slot");
    let constraints = mats
        .zip(rhs)
        .enumerate()
        .map(|(j, (blocks, b))| {
            let terms = blocks.into_iter().enumerate().filter(|(bi, _)| touched[j + 1][*bi]).collect();
            Constraint::new(format!("row{j}"), terms, b)
        })
        .collect();
    let blocks = sizes.iter().enumerate().map(|(i, &size)| BlockSpec { name: format!("B{}", i + 1), size }).collect();
    let problem = SdpProblem { blocks, costs, constraints, offset, mode };
    problem.validate()?;
    Ok(problem)
}

pub fn read_problem_str(text: &str, prec: u32) -> Result<SdpProblem> {
    read_problem(text.as_bytes(), prec)
}
