//! C ABI over the pacer, plan estimation and benchmark utilities.
//!
//! Every function returns an [`SpStatus`] and writes results through out
//! pointers. On failure a message is kept per thread and can be read with
//! [`sp_last_error_message`]. Handles are opaque and must be released with
//! their `_free` function.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::slice;

use spendpace::benchmark::{hindsight_value, Realization};
use spendpace::estimation::dkw_bound;
use spendpace::pacing::{EpisodicPacer, PacerConfig, Strategy};
use spendpace::spendplan::{approx_spend_rate, normalize_plan, EstimationSettings, SpendPlan};
use spendpace::Error;

/// Result of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidConfig = 3,
    ProtocolViolation = 4,
    Overcharge = 5,
    EstimationFailed = 6,
    AllZeroPlan = 7,
    Io = 8,
    Panic = 9,
}

/// Opaque pacer handle.
pub struct SpPacer {
    inner: EpisodicPacer,
}

/// Opaque spend-plan handle.
pub struct SpPlan {
    inner: SpendPlan,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> SpStatus {
    match err {
        Error::InvalidConfig(_) | Error::IndivisibleHorizon { .. } | Error::Config(_) => SpStatus::InvalidConfig,
        Error::ProtocolViolation(_) => SpStatus::ProtocolViolation,
        Error::Overcharge { .. } => SpStatus::Overcharge,
        Error::AllZeroPlan => SpStatus::AllZeroPlan,
        Error::EmptyLists | Error::LengthMismatch(..) | Error::NonpositiveBandwidth(_) => SpStatus::InvalidArgument,
        Error::Io(_) | Error::Json(_) | Error::Csv(_) => SpStatus::Io,
        _ => SpStatus::EstimationFailed,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), SpStatus>>(f: F) -> SpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SpStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("panic inside spendpace".into());
            SpStatus::Panic
        }
    }
}

fn lib<T>(r: spendpace::Result<T>) -> Result<T, SpStatus> {
    r.map_err(|e| {
        let s = status_of(&e);
        set_error(e.to_string());
        s
    })
}

fn invalid(msg: &str) -> SpStatus {
    set_error(msg.into());
    SpStatus::InvalidArgument
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize) -> Result<&'a [f64], SpStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        set_error("null array pointer".into());
        return Err(SpStatus::NullPointer);
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn out_arg<'a, T>(p: *mut T) -> Result<&'a mut T, SpStatus> {
    p.as_mut().ok_or_else(|| {
        set_error("null output pointer".into());
        SpStatus::NullPointer
    })
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, SpStatus> {
    p.as_ref().ok_or_else(|| {
        set_error("null handle".into());
        SpStatus::NullPointer
    })
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len - 1` bytes) and returns the full message
/// length in bytes.
#[no_mangle]
pub unsafe extern "C" fn sp_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

// ---------------------------------------------------------------- pacer

/// Creates a pacer with explicit step size, shading cap and initial shading.
/// `plan` holds `episodes` per-round target rates.
#[no_mangle]
pub unsafe extern "C" fn sp_pacer_new(
    budget: f64,
    horizon: usize,
    plan: *const f64,
    episodes: usize,
    eta: f64,
    mu_bar: f64,
    mu_init: f64,
    out: *mut *mut SpPacer,
) -> SpStatus {
    guard(|| {
        let out = out_arg(out)?;
        let plan = slice_arg(plan, episodes)?.to_vec();
        let config = PacerConfig { budget, horizon, plan, eta, mu_bar, mu_init };
        let inner = lib(EpisodicPacer::new(config))?;
        *out = Box::into_raw(Box::new(SpPacer { inner }));
        Ok(())
    })
}

/// Creates a pacer with the default step size, shading cap and zero initial
/// shading. `value_bound` is an upper bound on values.
#[no_mangle]
pub unsafe extern "C" fn sp_pacer_new_default(
    budget: f64,
    horizon: usize,
    plan: *const f64,
    episodes: usize,
    value_bound: f64,
    out: *mut *mut SpPacer,
) -> SpStatus {
    guard(|| {
        let out = out_arg(out)?;
        let plan = slice_arg(plan, episodes)?.to_vec();
        let config = lib(PacerConfig::with_defaults(budget, horizon, plan, value_bound))?;
        let inner = lib(EpisodicPacer::new(config))?;
        *out = Box::into_raw(Box::new(SpPacer { inner }));
        Ok(())
    })
}

/// Bid for a round with value `value`.
#[no_mangle]
pub unsafe extern "C" fn sp_pacer_bid(pacer: *mut SpPacer, value: f64, bid: *mut f64) -> SpStatus {
    guard(|| {
        let p = pacer.as_mut().ok_or_else(invalid_null)?;
        let bid = out_arg(bid)?;
        *bid = lib(p.inner.bid(value))?;
        Ok(())
    })
}

fn invalid_null() -> SpStatus {
    set_error("null handle".into());
    SpStatus::NullPointer
}

/// Reports the expenditure of the round just bid on (0 if lost).
#[no_mangle]
pub unsafe extern "C" fn sp_pacer_observe(pacer: *mut SpPacer, expenditure: f64) -> SpStatus {
    guard(|| {
        let p = pacer.as_mut().ok_or_else(invalid_null)?;
        lib(p.inner.observe(expenditure))
    })
}

#[no_mangle]
pub unsafe extern "C" fn sp_pacer_mu(pacer: *const SpPacer, mu: *mut f64) -> SpStatus {
    guard(|| {
        *out_arg(mu)? = handle(pacer)?.inner.state().mu;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sp_pacer_remaining_budget(pacer: *const SpPacer, budget: *mut f64) -> SpStatus {
    guard(|| {
        *out_arg(budget)? = handle(pacer)?.inner.state().global_budget;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sp_pacer_episode_budget(pacer: *const SpPacer, budget: *mut f64) -> SpStatus {
    guard(|| {
        *out_arg(budget)? = handle(pacer)?.inner.state().episode_budget;
        Ok(())
    })
}

/// 1-based round and episode about to be played.
#[no_mangle]
pub unsafe extern "C" fn sp_pacer_position(pacer: *const SpPacer, round: *mut usize, episode: *mut usize) -> SpStatus {
    guard(|| {
        let s = handle(pacer)?.inner.state();
        *out_arg(round)? = s.round;
        *out_arg(episode)? = s.episode;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sp_pacer_free(pacer: *mut SpPacer) {
    if !pacer.is_null() {
        drop(Box::from_raw(pacer));
    }
}

// ---------------------------------------------------------------- plans

/// Estimates a raw plan from `episodes * n` value and price samples laid out
/// episode by episode, using the default estimator settings.
#[no_mangle]
pub unsafe extern "C" fn sp_plan_estimate(
    budget: f64,
    horizon: usize,
    episodes: usize,
    n: usize,
    values: *const f64,
    prices: *const f64,
    out: *mut *mut SpPlan,
) -> SpStatus {
    guard(|| {
        let out = out_arg(out)?;
        if episodes == 0 || n == 0 {
            return Err(invalid("episodes and n must be positive"));
        }
        let total = episodes.checked_mul(n).ok_or_else(|| invalid("sample count overflows"))?;
        let values = slice_arg(values, total)?;
        let prices = slice_arg(prices, total)?;
        let samples: Vec<(Vec<f64>, Vec<f64>)> = values
            .chunks(n)
            .zip(prices.chunks(n))
            .map(|(v, p)| (v.to_vec(), p.to_vec()))
            .collect();
        let inner = lib(approx_spend_rate(budget, horizon, &samples, &EstimationSettings::default()))?;
        *out = Box::into_raw(Box::new(SpPlan { inner }));
        Ok(())
    })
}

/// Adds `delta` to every rate and rescales so the plan spends the budget
/// exactly. Returns a new handle.
#[no_mangle]
pub unsafe extern "C" fn sp_plan_normalize(plan: *const SpPlan, delta: f64, out: *mut *mut SpPlan) -> SpStatus {
    guard(|| {
        let out = out_arg(out)?;
        let inner = lib(normalize_plan(&handle(plan)?.inner, delta))?;
        *out = Box::into_raw(Box::new(SpPlan { inner }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sp_plan_episodes(plan: *const SpPlan, episodes: *mut usize) -> SpStatus {
    guard(|| {
        *out_arg(episodes)? = handle(plan)?.inner.episodes();
        Ok(())
    })
}

/// Copies the per-round rates into `rates`, which must hold `len >= episodes`
/// entries.
#[no_mangle]
pub unsafe extern "C" fn sp_plan_rates(plan: *const SpPlan, rates: *mut f64, len: usize) -> SpStatus {
    guard(|| {
        let rho = &handle(plan)?.inner.rho_hat;
        if len < rho.len() {
            return Err(invalid("output buffer is shorter than the plan"));
        }
        if rates.is_null() {
            return Err(invalid_null());
        }
        ptr::copy_nonoverlapping(rho.as_ptr(), rates, rho.len());
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sp_plan_mu_hat(plan: *const SpPlan, mu_hat: *mut f64) -> SpStatus {
    guard(|| {
        *out_arg(mu_hat)? = handle(plan)?.inner.mu_hat;
        Ok(())
    })
}

/// Writes the plan as JSON to the NUL-terminated UTF-8 `path`.
#[no_mangle]
pub unsafe extern "C" fn sp_plan_save(plan: *const SpPlan, path: *const c_char) -> SpStatus {
    guard(|| {
        let plan = handle(plan)?;
        if path.is_null() {
            return Err(invalid_null());
        }
        let path = CStr::from_ptr(path).to_str().map_err(|_| invalid("path is not UTF-8"))?;
        lib(plan.inner.save(Path::new(path)))
    })
}

/// Reads a plan written by `sp_plan_save` or the CLI.
#[no_mangle]
pub unsafe extern "C" fn sp_plan_load(path: *const c_char, out: *mut *mut SpPlan) -> SpStatus {
    guard(|| {
        let out = out_arg(out)?;
        if path.is_null() {
            return Err(invalid_null());
        }
        let path = CStr::from_ptr(path).to_str().map_err(|_| invalid("path is not UTF-8"))?;
        let inner = lib(SpendPlan::load(Path::new(path)))?;
        *out = Box::into_raw(Box::new(SpPlan { inner }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sp_plan_free(plan: *mut SpPlan) {
    if !plan.is_null() {
        drop(Box::from_raw(plan));
    }
}

// ---------------------------------------------------------------- utilities

/// Best fractional allocation in hindsight on `len` rounds.
#[no_mangle]
pub unsafe extern "C" fn sp_hindsight_value(
    values: *const f64,
    prices: *const f64,
    len: usize,
    budget: f64,
    out: *mut f64,
) -> SpStatus {
    guard(|| {
        let out = out_arg(out)?;
        let r = lib(Realization::new(slice_arg(values, len)?.to_vec(), slice_arg(prices, len)?.to_vec()))?;
        *out = hindsight_value(&r, budget).value;
        Ok(())
    })
}

/// `sqrt(ln(2 / delta) / (2 n))`.
#[no_mangle]
pub unsafe extern "C" fn sp_dkw_bound(n: usize, delta: f64, out: *mut f64) -> SpStatus {
    guard(|| {
        let out = out_arg(out)?;
        if n == 0 || !(delta > 0.0 && delta < 1.0) {
            return Err(invalid("need n > 0 and 0 < delta < 1"));
        }
        *out = dkw_bound(n, delta);
        Ok(())
    })
}
