//! C ABI over the analysis engines: opaque config handles, error codes, and
//! a thread-local last-error message.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};

use d2dcell::coverage::QuadratureSpec;
use d2dcell::metrics::{analytic_ase, Method};
use d2dcell::model::{Mode, NetworkConfig};
use d2dcell::sim::{run_campaign_with, CampaignOptions};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum D2dStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    InvalidConfig = 3,
    NumericsFailed = 4,
}

/// Opaque network configuration handle.
pub struct D2dConfig {
    cfg: NetworkConfig,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(code: D2dStatus, msg: &str) -> D2dStatus {
    set_error(msg);
    code
}

/// Message describing the most recent error on this thread. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn d2dcell_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Allocate a configuration seeded with the built-in defaults.
#[no_mangle]
pub extern "C" fn d2dcell_config_new() -> *mut D2dConfig {
    Box::into_raw(Box::new(D2dConfig {
        cfg: NetworkConfig::default(),
    }))
}

/// Release a configuration.
///
/// # Safety
/// `cfg` must come from `d2dcell_config_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn d2dcell_config_free(cfg: *mut D2dConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Set one configuration field by its config-file key (for example
/// "lambda_u" or "beta_dbm"). String-valued keys accept "none", "disk",
/// "serving", "true", "false" through `d2dcell_config_set_str`.
///
/// # Safety
/// `cfg` must be a live handle and `key` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn d2dcell_config_set(
    cfg: *mut D2dConfig,
    key: *const c_char,
    value: f64,
) -> D2dStatus {
    if cfg.is_null() || key.is_null() {
        return fail(D2dStatus::NullArgument, "null handle or key");
    }
    let key = match CStr::from_ptr(key).to_str() {
        Ok(k) => k,
        Err(_) => return fail(D2dStatus::InvalidArgument, "key is not UTF-8"),
    };
    let line = format!("{key} = {value}");
    apply_line(&mut (*cfg).cfg, &line)
}

/// Set one configuration field from a string value.
///
/// # Safety
/// `cfg` must be a live handle; `key` and `value` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn d2dcell_config_set_str(
    cfg: *mut D2dConfig,
    key: *const c_char,
    value: *const c_char,
) -> D2dStatus {
    if cfg.is_null() || key.is_null() || value.is_null() {
        return fail(D2dStatus::NullArgument, "null handle, key or value");
    }
    let (key, value) = match (CStr::from_ptr(key).to_str(), CStr::from_ptr(value).to_str()) {
        (Ok(k), Ok(v)) => (k, v),
        _ => return fail(D2dStatus::InvalidArgument, "key/value not UTF-8"),
    };
    let line = format!("{key} = {value}");
    apply_line(&mut (*cfg).cfg, &line)
}

fn apply_line(cfg: &mut NetworkConfig, line: &str) -> D2dStatus {
    // Reuse the config-file grammar: serialize current state, replace the key.
    let mut lines: Vec<String> = d2dcell::experiments::config_lines(cfg)
        .into_iter()
        .map(|(k, v)| format!("{k} = {v}"))
        .collect();
    let key = line.split('=').next().unwrap().trim();
    let mut replaced = false;
    for l in &mut lines {
        if l.split('=').next().unwrap().trim() == key {
            *l = line.to_string();
            replaced = true;
        }
    }
    if !replaced {
        return fail(D2dStatus::InvalidArgument, &format!("unknown key {key}"));
    }
    match d2dcell::experiments::parse_config(&lines.join("\n")) {
        Ok(parsed) => {
            *cfg = parsed;
            D2dStatus::Ok
        }
        Err(e) => fail(D2dStatus::InvalidConfig, &e.to_string()),
    }
}

/// Closed-form probability that a UE operates in cellular mode.
///
/// # Safety
/// `cfg` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn d2dcell_mode_probability(
    cfg: *const D2dConfig,
    out: *mut f64,
) -> D2dStatus {
    if cfg.is_null() || out.is_null() {
        return fail(D2dStatus::NullArgument, "null handle or out pointer");
    }
    match d2dcell::equivalence::mode_probability(&(*cfg).cfg) {
        Ok(split) => {
            *out = split.q;
            D2dStatus::Ok
        }
        Err(e) => fail(D2dStatus::InvalidConfig, &e.to_string()),
    }
}

/// Mean cellular transmit power under channel inversion, mW.
///
/// # Safety
/// `cfg` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn d2dcell_mean_cu_tx_power_mw(
    cfg: *const D2dConfig,
    out: *mut f64,
) -> D2dStatus {
    if cfg.is_null() || out.is_null() {
        return fail(D2dStatus::NullArgument, "null handle or out pointer");
    }
    match d2dcell::equivalence::cu_mean_tx_power(&(*cfg).cfg) {
        Ok(v) => {
            *out = v;
            D2dStatus::Ok
        }
        Err(e) => fail(D2dStatus::NumericsFailed, &e.to_string()),
    }
}

fn mode_from_int(mode: c_int) -> Option<Mode> {
    match mode {
        0 => Some(Mode::Cellular),
        1 => Some(Mode::D2d),
        _ => None,
    }
}

/// Analytic coverage probabilities over a threshold grid (dB). `mode` is
/// 0 = cellular, 1 = D2D. `out` must hold `len` doubles.
///
/// # Safety
/// `cfg` live; `t_db` and `out` valid for `len` elements.
#[no_mangle]
pub unsafe extern "C" fn d2dcell_coverage_analytic(
    cfg: *const D2dConfig,
    mode: c_int,
    t_db: *const f64,
    len: usize,
    out: *mut f64,
) -> D2dStatus {
    if cfg.is_null() || t_db.is_null() || out.is_null() {
        return fail(D2dStatus::NullArgument, "null pointer");
    }
    let mode = match mode_from_int(mode) {
        Some(m) => m,
        None => return fail(D2dStatus::InvalidArgument, "mode must be 0 or 1"),
    };
    let ts = std::slice::from_raw_parts(t_db, len);
    if ts.windows(2).any(|w| w[1] <= w[0]) {
        return fail(D2dStatus::InvalidArgument, "thresholds must increase");
    }
    let spec = QuadratureSpec::default();
    let ps = match mode {
        Mode::Cellular => d2dcell::coverage::coverage_curve_cellular(ts, &(*cfg).cfg, &spec),
        Mode::D2d => d2dcell::coverage::coverage_curve_d2d(ts, &(*cfg).cfg, &spec),
    };
    match ps {
        Ok(ps) => {
            std::ptr::copy_nonoverlapping(ps.as_ptr(), out, len);
            D2dStatus::Ok
        }
        Err(e) => fail(D2dStatus::NumericsFailed, &e.to_string()),
    }
}

/// Monte Carlo coverage probabilities with confidence half-widths over a
/// threshold grid. `out_ci` may be NULL when the widths are not wanted.
///
/// # Safety
/// `cfg` live; arrays valid for `len` elements.
#[no_mangle]
pub unsafe extern "C" fn d2dcell_coverage_montecarlo(
    cfg: *const D2dConfig,
    mode: c_int,
    t_db: *const f64,
    len: usize,
    n_realizations: usize,
    seed: u64,
    out: *mut f64,
    out_ci: *mut f64,
) -> D2dStatus {
    if cfg.is_null() || t_db.is_null() || out.is_null() {
        return fail(D2dStatus::NullArgument, "null pointer");
    }
    let mode = match mode_from_int(mode) {
        Some(m) => m,
        None => return fail(D2dStatus::InvalidArgument, "mode must be 0 or 1"),
    };
    let ts = std::slice::from_raw_parts(t_db, len).to_vec();
    let opts = CampaignOptions {
        thresholds_db: ts,
        ..CampaignOptions::default()
    };
    match run_campaign_with(&(*cfg).cfg, seed, n_realizations, &opts) {
        Ok(camp) => match camp
            .curves
            .iter()
            .find(|c| c.mode == mode && c.method == Method::MonteCarlo)
        {
            Some(curve) => {
                std::ptr::copy_nonoverlapping(curve.probabilities.as_ptr(), out, len);
                if !out_ci.is_null() {
                    std::ptr::copy_nonoverlapping(curve.ci_halfwidth.as_ptr(), out_ci, len);
                }
                D2dStatus::Ok
            }
            None => fail(
                D2dStatus::NumericsFailed,
                "campaign yielded no samples for the requested mode",
            ),
        },
        Err(e) => fail(D2dStatus::NumericsFailed, &e.to_string()),
    }
}

/// Analytic ASE at a working threshold: out[0] = cellular, out[1] = d2d,
/// out[2] = sum, in bps/Hz/km².
///
/// # Safety
/// `cfg` live; `out` valid for three doubles.
#[no_mangle]
pub unsafe extern "C" fn d2dcell_ase_analytic(
    cfg: *const D2dConfig,
    gamma0_db: f64,
    out: *mut f64,
) -> D2dStatus {
    if cfg.is_null() || out.is_null() {
        return fail(D2dStatus::NullArgument, "null pointer");
    }
    match analytic_ase(&(*cfg).cfg, gamma0_db, &QuadratureSpec::default()) {
        Ok(a) => {
            *out.add(0) = a.ase_cellular;
            *out.add(1) = a.ase_d2d;
            *out.add(2) = a.ase_sum;
            D2dStatus::Ok
        }
        Err(e) => fail(D2dStatus::NumericsFailed, &e.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_lifecycle_and_mode_probability() {
        unsafe {
            let cfg = d2dcell_config_new();
            let key = CString::new("beta_dbm").unwrap();
            assert_eq!(d2dcell_config_set(cfg, key.as_ptr(), -70.0), D2dStatus::Ok);
            let bogus = CString::new("bogus").unwrap();
            assert_eq!(
                d2dcell_config_set(cfg, bogus.as_ptr(), 1.0),
                D2dStatus::InvalidArgument
            );
            let msg = CStr::from_ptr(d2dcell_last_error()).to_str().unwrap();
            assert!(msg.contains("bogus"));
            let mut q = 0.0;
            assert_eq!(d2dcell_mode_probability(cfg, &mut q), D2dStatus::Ok);
            assert!(q > 0.0 && q < 1.0);
            d2dcell_config_free(cfg);
        }
    }

    #[test]
    fn invalid_config_rejected() {
        unsafe {
            let cfg = d2dcell_config_new();
            let key = CString::new("epsilon").unwrap();
            assert_eq!(
                d2dcell_config_set(cfg, key.as_ptr(), 0.0),
                D2dStatus::InvalidConfig
            );
            d2dcell_config_free(cfg);
        }
    }

    #[test]
    fn analytic_coverage_through_ffi() {
        unsafe {
            let cfg = d2dcell_config_new();
            let ts = [-10.0, 0.0, 10.0];
            let mut out = [0.0; 3];
            let st = d2dcell_coverage_analytic(cfg, 0, ts.as_ptr(), 3, out.as_mut_ptr());
            assert_eq!(st, D2dStatus::Ok);
            assert!(out[0] > out[2]);
            assert!(out.iter().all(|p| (0.0..=1.0).contains(p)));
            d2dcell_config_free(cfg);
        }
    }
}
