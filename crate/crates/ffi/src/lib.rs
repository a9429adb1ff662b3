//! C ABI over the hookforge core: workspace parsing, checking, C generation
//! and ledger simulation.
//!
//! Every function returns an [`HfStatus`]. On failure the thread-local last
//! error holds a rule code and a message until the next call on the same
//! thread. Strings handed out by the library must be released with
//! [`hf_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use hookforge::address::AccountAddress;
use hookforge::block_ir::{parse_workspace, validate, BlockProgram};
use hookforge::codegen_c::generate;
use hookforge::guard_check::analyze;
use hookforge::hook_vm::{
    apply_transaction, install_hook, run_scenario, ExamplesOnly, LedgerState, Scenario, SimConfig, Transaction, Trigger,
};
use serde_json::json;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HfStatus {
    HfOk = 0,
    HfErrNullPointer = 1,
    HfErrInvalidUtf8 = 2,
    /// The input document or scenario did not parse.
    HfErrParse = 3,
    /// An address, trigger or amount argument is invalid.
    HfErrInvalidArgument = 4,
    /// The program failed validation or the guard check.
    HfErrNotClean = 5,
    HfErrUnknownAccount = 6,
    HfErrAccountExists = 7,
    /// A Rust panic was caught at the boundary.
    HfErrInternal = 99,
}

/// A parsed block program.
pub struct HfProgram {
    program: BlockProgram,
}

/// A simulated ledger. Not thread-safe; callers serialize access.
pub struct HfLedger {
    state: LedgerState,
}

struct LastError {
    code: CString,
    message: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<LastError>> = const { RefCell::new(None) };
}

struct Failure {
    status: HfStatus,
    code: String,
    message: String,
}

impl Failure {
    fn new(status: HfStatus, code: &str, message: impl Into<String>) -> Self {
        Failure { status, code: code.to_string(), message: message.into() }
    }
}

fn set_last_error(code: &str, message: &str) {
    let clean = |s: &str| CString::new(s.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(LastError { code: clean(code), message: clean(message) }));
}

/// Runs `f`, translating failures and panics into a status and last error.
fn guarded(f: impl FnOnce() -> Result<(), Failure>) -> HfStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HfStatus::HfOk,
        Ok(Err(f)) => {
            set_last_error(&f.code, &f.message);
            f.status
        }
        Err(_) => {
            set_last_error("INTERNAL", "panic inside hookforge");
            HfStatus::HfErrInternal
        }
    }
}

unsafe fn str_arg<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if ptr.is_null() {
        return Err(Failure::new(HfStatus::HfErrNullPointer, "NULL_POINTER", format!("{name} is NULL")));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| Failure::new(HfStatus::HfErrInvalidUtf8, "INVALID_UTF8", format!("{name} is not UTF-8")))
}

unsafe fn out_arg<'a, T>(ptr: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    ptr.as_mut().ok_or_else(|| Failure::new(HfStatus::HfErrNullPointer, "NULL_POINTER", format!("{name} is NULL")))
}

unsafe fn address_arg(ptr: *const c_char, name: &str) -> Result<AccountAddress, Failure> {
    let text = str_arg(ptr, name)?;
    AccountAddress::parse(text).map_err(|e| Failure::new(HfStatus::HfErrInvalidArgument, "INVALID_ADDRESS", format!("{name}: {e}")))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("nul bytes removed").into_raw()
}

/// Rule code of the last failure on this thread, or NULL. Valid until the
/// next hookforge call on the same thread.
#[no_mangle]
pub extern "C" fn hf_last_error_code() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |e| e.code.as_ptr()))
}

/// Message of the last failure on this thread, or NULL.
#[no_mangle]
pub extern "C" fn hf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |e| e.message.as_ptr()))
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn hf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a workspace document into a new program handle.
///
/// # Safety
/// `workspace_json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hf_program_parse(workspace_json: *const c_char, out: *mut *mut HfProgram) -> HfStatus {
    guarded(|| {
        let out = out_arg(out, "out")?;
        *out = std::ptr::null_mut();
        let text = str_arg(workspace_json, "workspace_json")?;
        let program = parse_workspace(text).map_err(|e| Failure::new(HfStatus::HfErrParse, e.code(), e.to_string()))?;
        *out = Box::into_raw(Box::new(HfProgram { program }));
        Ok(())
    })
}

/// # Safety
/// `program` must be NULL or a handle from [`hf_program_parse`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hf_program_free(program: *mut HfProgram) {
    if !program.is_null() {
        drop(Box::from_raw(program));
    }
}

/// Validation and guard reports as one JSON document
/// `{"ok", "validation", "guard"}`. `*ok` is set even when reports list errors.
///
/// # Safety
/// `program` must be a live handle; `ok` and `report_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hf_program_check(program: *const HfProgram, ok: *mut bool, report_json: *mut *mut c_char) -> HfStatus {
    guarded(|| {
        let program = &program.as_ref().ok_or_else(|| Failure::new(HfStatus::HfErrNullPointer, "NULL_POINTER", "program is NULL"))?.program;
        let ok = out_arg(ok, "ok")?;
        let report_out = out_arg(report_json, "report_json")?;
        let validation = validate(program);
        let guard = analyze(program);
        *ok = validation.ok && guard.ok;
        *report_out = into_c_string(json!({ "ok": *ok, "validation": validation, "guard": guard }).to_string());
        Ok(())
    })
}

/// Generates Hooks C for a clean program.
///
/// # Safety
/// `program` must be a live handle; `c_source` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hf_program_generate_c(program: *const HfProgram, c_source: *mut *mut c_char) -> HfStatus {
    guarded(|| {
        let program = &program.as_ref().ok_or_else(|| Failure::new(HfStatus::HfErrNullPointer, "NULL_POINTER", "program is NULL"))?.program;
        let out = out_arg(c_source, "c_source")?;
        *out = std::ptr::null_mut();
        let source = generate(program).map_err(|e| Failure::new(HfStatus::HfErrNotClean, e.code(), e.to_string()))?;
        *out = into_c_string(source.text);
        Ok(())
    })
}

/// An empty ledger.
#[no_mangle]
pub extern "C" fn hf_ledger_new() -> *mut HfLedger {
    Box::into_raw(Box::new(HfLedger { state: LedgerState::default() }))
}

/// # Safety
/// `ledger` must be NULL or a handle from [`hf_ledger_new`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hf_ledger_free(ledger: *mut HfLedger) {
    if !ledger.is_null() {
        drop(Box::from_raw(ledger));
    }
}

unsafe fn ledger_mut<'a>(ledger: *mut HfLedger) -> Result<&'a mut HfLedger, Failure> {
    ledger.as_mut().ok_or_else(|| Failure::new(HfStatus::HfErrNullPointer, "NULL_POINTER", "ledger is NULL"))
}

/// Opens a new account with `drops`.
///
/// # Safety
/// `ledger` must be a live handle; `address` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn hf_ledger_add_account(ledger: *mut HfLedger, address: *const c_char, drops: u64) -> HfStatus {
    guarded(|| {
        let ledger = ledger_mut(ledger)?;
        let address = address_arg(address, "address")?;
        if ledger.state.accounts.contains_key(&address) {
            return Err(Failure::new(HfStatus::HfErrAccountExists, "ACCOUNT_EXISTS", format!("{address} already exists")));
        }
        ledger.state.accounts.insert(address, drops);
        Ok(())
    })
}

/// # Safety
/// `ledger` must be a live handle; `address` a NUL-terminated string; `drops` writable.
#[no_mangle]
pub unsafe extern "C" fn hf_ledger_balance(ledger: *const HfLedger, address: *const c_char, drops: *mut u64) -> HfStatus {
    guarded(|| {
        let ledger = ledger.as_ref().ok_or_else(|| Failure::new(HfStatus::HfErrNullPointer, "NULL_POINTER", "ledger is NULL"))?;
        let address = address_arg(address, "address")?;
        let out = out_arg(drops, "drops")?;
        *out = ledger
            .state
            .balance(&address)
            .ok_or_else(|| Failure::new(HfStatus::HfErrUnknownAccount, "UNKNOWN_ACCOUNT", format!("{address} does not exist")))?;
        Ok(())
    })
}

/// Installs a copy of `program` on `address`. `trigger` is "outgoing",
/// "incoming" or "both".
///
/// # Safety
/// Handles must be live; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn hf_ledger_install(
    ledger: *mut HfLedger,
    address: *const c_char,
    program: *const HfProgram,
    trigger: *const c_char,
) -> HfStatus {
    guarded(|| {
        let ledger = ledger_mut(ledger)?;
        let address = address_arg(address, "address")?;
        let program = program.as_ref().ok_or_else(|| Failure::new(HfStatus::HfErrNullPointer, "NULL_POINTER", "program is NULL"))?;
        let trigger: Trigger = str_arg(trigger, "trigger")?
            .parse()
            .map_err(|e: String| Failure::new(HfStatus::HfErrInvalidArgument, "INVALID_TRIGGER", e))?;
        ledger.state = install_hook(&ledger.state, &address, program.program.clone(), trigger).map_err(|e| {
            let status = if e.code() == "UNKNOWN_ACCOUNT" { HfStatus::HfErrUnknownAccount } else { HfStatus::HfErrNotClean };
            Failure::new(status, e.code(), e.to_string())
        })?;
        Ok(())
    })
}

/// Applies a payment. A payment the ledger rejects is still `HF_OK`; the
/// outcome is in the report. `report_json` may be NULL when not wanted.
///
/// # Safety
/// `ledger` must be live; strings NUL-terminated; `applied` writable;
/// `report_json` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn hf_ledger_pay(
    ledger: *mut HfLedger,
    from: *const c_char,
    to: *const c_char,
    amount_drops: u64,
    applied: *mut bool,
    report_json: *mut *mut c_char,
) -> HfStatus {
    guarded(|| {
        let ledger = ledger_mut(ledger)?;
        let tx = Transaction::payment(address_arg(from, "from")?, address_arg(to, "to")?, amount_drops);
        let applied = out_arg(applied, "applied")?;
        let (next, report) = apply_transaction(&ledger.state, &tx, SimConfig::default());
        ledger.state = next;
        *applied = report.outcome.is_applied();
        if let Some(out) = report_json.as_mut() {
            *out = into_c_string(serde_json::to_string(&report).expect("reports serialize"));
        }
        Ok(())
    })
}

/// Total drops held by all accounts plus burned fees.
///
/// # Safety
/// `ledger` must be live; `total` writable.
#[no_mangle]
pub unsafe extern "C" fn hf_ledger_total_drops(ledger: *const HfLedger, total: *mut u64) -> HfStatus {
    guarded(|| {
        let ledger = ledger.as_ref().ok_or_else(|| Failure::new(HfStatus::HfErrNullPointer, "NULL_POINTER", "ledger is NULL"))?;
        let out = out_arg(total, "total")?;
        *out = u64::try_from(ledger.state.total_drops())
            .map_err(|_| Failure::new(HfStatus::HfErrInvalidArgument, "OVERFLOW", "total exceeds 64 bits"))?;
        Ok(())
    })
}

/// The ledger as JSON.
///
/// # Safety
/// `ledger` must be live; `json_out` writable.
#[no_mangle]
pub unsafe extern "C" fn hf_ledger_to_json(ledger: *const HfLedger, json_out: *mut *mut c_char) -> HfStatus {
    guarded(|| {
        let ledger = ledger.as_ref().ok_or_else(|| Failure::new(HfStatus::HfErrNullPointer, "NULL_POINTER", "ledger is NULL"))?;
        let out = out_arg(json_out, "json_out")?;
        *out = into_c_string(serde_json::to_string(&ledger.state).expect("ledgers serialize"));
        Ok(())
    })
}

/// Runs a scenario document (bundled examples only, no file references)
/// and returns the machine report.
///
/// # Safety
/// `scenario_json` must be NUL-terminated; `report_json` writable.
#[no_mangle]
pub unsafe extern "C" fn hf_simulate(scenario_json: *const c_char, report_json: *mut *mut c_char) -> HfStatus {
    guarded(|| {
        let out = out_arg(report_json, "report_json")?;
        *out = std::ptr::null_mut();
        let text = str_arg(scenario_json, "scenario_json")?;
        let parse_fail = |e: hookforge::hook_vm::ScenarioError| {
            Failure::new(HfStatus::HfErrParse, &e.code, format!("line {}: {}", e.line, e.message))
        };
        let scenario = Scenario::parse(text, &ExamplesOnly).map_err(parse_fail)?;
        let report = run_scenario(&scenario).map_err(|e| {
            let status = if e.code == "UNKNOWN_ACCOUNT" { HfStatus::HfErrUnknownAccount } else { HfStatus::HfErrNotClean };
            Failure::new(status, &e.code, format!("line {}: {}", e.line, e.message))
        })?;
        *out = into_c_string(report.to_machine());
        Ok(())
    })
}
