//! Acceptance suite: one PASS/FAIL line per criterion.

mod gen;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use gen::{inject, Gen, FIXTURES, INJECTED_CLASSES};
use hookforge::address::{AccountAddress, AccountId};
use hookforge::block_ir::{parse_workspace, serialize_workspace, validate, BlockProgram, FieldValue};
use hookforge::codegen_c::generate;
use hookforge::compiler_bridge::{compile_c, serve_mock_compiler, CompileOutcome, CompilerConfig};
use hookforge::examples::{self, CARBON_OFFSET_SCENARIO};
use hookforge::guard_check::analyze;
use hookforge::hook_vm::{
    apply_transaction, execute_cbak, execute_hook, install_hook, run_scenario, run_scenario_with, Disposition,
    ExamplesOnly, HookContext, LedgerState, Scenario, ScenarioInstall, ScenarioPayment, SimConfig, Transaction,
    Trigger, TxOutcome,
};
use hookforge::xrpl_client::mock::{serve_mock_faucet, serve_mock_node, FaucetOptions, NodeOptions};
use hookforge::xrpl_client::{
    account_sequence, build_sethook_tx, codec, faucet_create_account, sign_json, sign_tx, submit, tx_hash,
    verify_signed_blob, Seed, SetHookOptions, SubmitStatus,
};
use rand::seq::SliceRandom;
use rand::Rng;
use serde_json::{json, Map, Value};

const T: Duration = Duration::from_secs(5);

fn addr(s: &str) -> AccountAddress {
    AccountAddress::parse(s).unwrap()
}

fn example(name: &str) -> BlockProgram {
    parse_workspace(examples::get(name).unwrap().workspace_json).unwrap()
}

fn c1_accept_all_golden() {
    let started = Instant::now();
    let text = generate(&example("accept-all")).unwrap().text;
    assert_eq!(text, include_str!("../golden/accept_all.c"));
    let body = &text[text.find("int64_t hook(").unwrap()..];
    let lines: Vec<&str> = body.lines().map(str::trim).filter(|l| l.ends_with(';')).collect();
    assert_eq!(lines, ["_g(1,1);", "TRACESTR(\"Accept.c: Called.\");", "accept(SBUF(\"Accepted!\"),1);"]);
    assert!(started.elapsed() < Duration::from_secs(1), "took {:?}", started.elapsed());
}

fn c2_carbon_offset() {
    let started = Instant::now();
    let scenario = Scenario::parse(CARBON_OFFSET_SCENARIO, &ExamplesOnly).unwrap();
    let mut genesis = LedgerState::default();
    genesis.accounts = scenario.genesis.clone();
    let report = run_scenario(&scenario).unwrap();
    let carbon = addr(FIXTURES[2]);
    let before = scenario.genesis[&carbon];
    assert_eq!(report.final_ledger.balance(&carbon).unwrap() - before, 10_000_000);
    assert_eq!(report.final_ledger.total_drops(), genesis.total_drops());
    assert_eq!(report.transactions[0].tx.amount, 1_000_000_000);
    assert!(started.elapsed() < Duration::from_secs(1), "took {:?}", started.elapsed());
}

fn c3_example_decisions() {
    let (alice, bob, mallory, carol) = (addr(FIXTURES[0]), addr(FIXTURES[1]), addr(FIXTURES[3]), addr(FIXTURES[4]));
    let ledger = LedgerState::with_accounts([(bob.clone(), 100_000_000), (alice.clone(), 0), (mallory.clone(), 1_000), (carol.clone(), 1_000)]);

    let deny = install_hook(&ledger, &alice, example("deny-under-20"), Trigger::Incoming).unwrap();
    let (after, r) = apply_transaction(&deny, &Transaction::payment(bob.clone(), alice.clone(), 19_999_999), SimConfig::default());
    assert!(!r.outcome.is_applied());
    assert!(matches!(r.receiver_hook.unwrap().disposition, Disposition::RolledBack { .. }));
    assert_eq!(after, deny);
    let (after, r) = apply_transaction(&deny, &Transaction::payment(bob.clone(), alice.clone(), 20_000_000), SimConfig::default());
    assert!(r.outcome.is_applied());
    assert_eq!(after.balance(&alice), Some(20_000_000));

    let black = install_hook(&ledger, &alice, example("blacklist"), Trigger::Incoming).unwrap();
    for listed in [&mallory, &carol] {
        let (after, r) = apply_transaction(&black, &Transaction::payment(listed.clone(), alice.clone(), 10), SimConfig::default());
        assert!(!r.outcome.is_applied());
        assert_eq!(after, black);
    }
    let (after, r) = apply_transaction(&black, &Transaction::payment(bob.clone(), alice.clone(), 10), SimConfig::default());
    assert!(r.outcome.is_applied());
    assert_eq!(after.balance(&alice), Some(10));
}

fn random_state(g: &mut Gen) -> BTreeMap<(AccountAddress, String), i64> {
    let mut state = BTreeMap::new();
    for _ in 0..g.rng.gen_range(0..4) {
        let key = ["count", "total", "k", "last_amount"].choose(&mut g.rng).unwrap().to_string();
        let value = if g.rng.gen_bool(0.5) { g.rng.gen_range(-10..1_000) } else { g.rng.gen() };
        state.insert((g.address(), key), value);
    }
    state
}

fn c4_termination_soundness() {
    let mut g = Gen::new(4);
    let mut runs = 0;
    for i in 0..1_000 {
        let program = g.program();
        let v = validate(&program);
        assert!(v.ok, "program {i} is not valid: {:?}", v.errors().collect::<Vec<_>>());
        let report = analyze(&program);
        assert!(report.ok, "program {i}: {:?}", report.violations);
        for _ in 0..5 {
            let amount = if g.rng.gen_bool(0.8) { g.rng.gen_range(0..100_000_000) } else { g.rng.gen() };
            let tx = Transaction::payment(g.address(), g.address(), amount);
            let hook_account = g.address();
            let state = random_state(&mut g);
            let ctx = HookContext { otxn: &tx, hook_account: &hook_account, state: &state };
            let r = execute_hook(&program, &ctx);
            assert!(r.steps_executed <= report.static_step_bound, "program {i}: {} > {}", r.steps_executed, report.static_step_bound);
            if let Some(c) = execute_cbak(&program, &ctx, g.rng.gen_range(-1..5)) {
                assert!(c.steps_executed <= report.cbak_step_bound.unwrap());
            }
            runs += 1;
        }
    }
    assert!(runs >= 5_000);

    let mut g = Gen::new(40);
    for i in 0..1_000 {
        let class = INJECTED_CLASSES[i % INJECTED_CLASSES.len()];
        let mut program = g.program();
        inject(&mut g, &mut program, class);
        let report = analyze(&program);
        assert!(!report.ok && report.violations.iter().any(|v| v.rule == class), "missed {class} in program {i}: {:?}", report.violations);
    }
}

fn c5_conservation_and_atomicity() {
    let mut g = Gen::new(5);
    let mut rejected = 0;
    let mut applied = 0;
    for i in 0..1_000 {
        let mut accounts: Vec<AccountAddress> = (0..g.rng.gen_range(2..6)).map(|_| g.address()).collect();
        accounts.sort();
        accounts.dedup();
        let genesis: BTreeMap<AccountAddress, u64> = accounts
            .iter()
            .map(|a| {
                let drops = match g.rng.gen_range(0..10) {
                    0 => 0,
                    1 => u64::MAX - g.rng.gen_range(0..1_000_000),
                    _ => g.rng.gen_range(0..5_000_000_000),
                };
                (a.clone(), drops)
            })
            .collect();
        let mut installs = Vec::new();
        for a in &accounts {
            if g.rng.gen_bool(0.5) {
                let program = if g.rng.gen_bool(0.7) {
                    g.program()
                } else {
                    example(examples::EXAMPLES.choose(&mut g.rng).unwrap().name)
                };
                let trigger = *[Trigger::Incoming, Trigger::Outgoing, Trigger::Both].choose(&mut g.rng).unwrap();
                installs.push(ScenarioInstall { account: a.clone(), program, trigger, line: 0 });
            }
        }
        let payments: Vec<ScenarioPayment> = (0..g.rng.gen_range(1..10))
            .map(|_| {
                let party = |g: &mut Gen| if g.rng.gen_bool(0.9) { accounts.choose(&mut g.rng).unwrap().clone() } else { g.address() };
                let from = party(&mut g);
                let to = party(&mut g);
                let amount_drops = match g.rng.gen_range(0..6) {
                    0 => 0,
                    1 => g.rng.gen(),
                    _ => g.rng.gen_range(1..2_000_000_000),
                };
                ScenarioPayment { from, to, amount_drops }
            })
            .collect();
        let config = SimConfig { fee_drops: if g.rng.gen_bool(0.5) { 0 } else { g.rng.gen_range(1..20) } };

        let mut ledger = LedgerState::with_accounts(genesis.clone());
        for inst in &installs {
            ledger = install_hook(&ledger, &inst.account, inst.program.clone(), inst.trigger).unwrap();
        }
        let total = ledger.total_drops();
        for p in &payments {
            let before = ledger.clone();
            let (after, report) = apply_transaction(&before, &Transaction::payment(p.from.clone(), p.to.clone(), p.amount_drops), config);
            assert_eq!(after.total_drops(), total, "scenario {i}: drops not conserved");
            match report.outcome {
                TxOutcome::Applied { .. } => applied += 1,
                TxOutcome::Rejected { .. } => {
                    assert_eq!(after, before, "scenario {i}: rejected transaction changed the ledger");
                    rejected += 1;
                }
            }
            ledger = after;
        }
        let scenario = Scenario { genesis, installs, payments };
        let report = run_scenario_with(&scenario, config).unwrap();
        assert_eq!(report.final_ledger, ledger, "scenario {i}: runner disagrees with stepwise application");
    }
    assert!(rejected > 100 && applied > 100, "applied {applied}, rejected {rejected}");
}

fn random_payment(g: &mut Gen) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("TransactionType".into(), json!("Payment"));
    m.insert("Account".into(), json!(AccountId(g.rng.gen()).to_address().as_str()));
    m.insert("Destination".into(), json!(AccountId(g.rng.gen()).to_address().as_str()));
    m.insert("Amount".into(), json!(g.rng.gen_range(1..=codec::MAX_DROPS).to_string()));
    m.insert("Fee".into(), json!(g.rng.gen_range(0..=u64::from(u32::MAX)).to_string()));
    m.insert("Sequence".into(), json!(g.rng.gen::<u32>()));
    m.insert("Flags".into(), json!(g.rng.gen::<u32>()));
    if g.rng.gen_bool(0.5) {
        m.insert("NetworkID".into(), json!(g.rng.gen::<u32>()));
    }
    if g.rng.gen_bool(0.5) {
        m.insert("LastLedgerSequence".into(), json!(g.rng.gen::<u32>()));
    }
    m.insert("SigningPubKey".into(), json!(hex::encode_upper(g.rng.gen::<[u8; 32]>())));
    m
}

fn random_sethook(g: &mut Gen) -> Map<String, Value> {
    let hooks: Vec<Value> = (0..g.rng.gen_range(1..4))
        .map(|_| {
            let code: Vec<u8> = (0..g.rng.gen_range(1..400)).map(|_| g.rng.gen()).collect();
            json!({ "Hook": {
                "CreateCode": hex::encode_upper(code),
                "HookOn": hex::encode_upper(g.rng.gen::<[u8; 32]>()),
                "HookNamespace": hex::encode_upper(g.rng.gen::<[u8; 32]>()),
                "HookApiVersion": g.rng.gen::<u16>(),
            }})
        })
        .collect();
    let mut m = Map::new();
    m.insert("TransactionType".into(), json!("SetHook"));
    m.insert("Account".into(), json!(AccountId(g.rng.gen()).to_address().as_str()));
    m.insert("Sequence".into(), json!(g.rng.gen::<u32>()));
    m.insert("Fee".into(), json!(g.rng.gen_range(0..1_000_000u64).to_string()));
    m.insert("Flags".into(), json!(0));
    m.insert("Hooks".into(), Value::Array(hooks));
    m
}

// Produced by tests/oracles/signer_vector.py with xrpl-py.
const VECTOR_SEED: &str = "sEdSKaCy2JT7JaM7v95H9SxkhP9wS2r";
const VECTOR_ACCOUNT: &str = "rLUEXYuLiQptky37CqLcm9USQpPiz5rkpD";
const VECTOR_PUBLIC_KEY: &str = "ED01FA53FA5A7E77798F882ECE20B1ABC00BB358A9E55A202D0D0676BD0CE37A63";
const VECTOR_BLOB: &str = "120000210000535A2200000000240000000761400000000098968068400000000000000C7321ED01FA53FA5A7E77798F882ECE20B1ABC00BB358A9E55A202D0D0676BD0CE37A637440E246D1606502EAD0094A800C08325BD205E24F31684F6E4C1B7E3A41C15E10A56738D393D9D1A9CFBE4BA951C50DEACAA67A63987041F491F4F25D94391EA1008114D28B177E48D9A8D057E70F7E464B498367281B98831481B637D8FCD2C6DA6359E6963113A1170DE795E4";
const VECTOR_HASH: &str = "B2A6C7F1262D679D81FCFF415454A2FD3F7CF4D52E91F225FF7D6A39F88E5C80";

fn c6_round_trips() {
    let mut g = Gen::new(6);
    for i in 0..600 {
        let program = g.any_program();
        let text = serialize_workspace(&program);
        let back = parse_workspace(&text).unwrap_or_else(|e| panic!("program {i}: {e}"));
        assert_eq!(back, program, "program {i}");
        assert_eq!(serialize_workspace(&back), text, "program {i}");
    }
    // XRP literals are stored as drops, and that form is stable
    let doc = examples::get("deny-under-20").unwrap().workspace_json;
    let parsed = parse_workspace(doc).unwrap();
    let mut nums = Vec::new();
    for b in &parsed.blocks {
        b.walk(&mut |b| nums.extend(b.field("NUM").and_then(FieldValue::as_integer)));
    }
    assert_eq!(nums, [20_000_000]);
    assert_eq!(parse_workspace(&serialize_workspace(&parsed)).unwrap(), parsed);

    for _ in 0..500 {
        for tx in [random_payment(&mut g), random_sethook(&mut g)] {
            let bytes = codec::encode(&tx).unwrap();
            let back = codec::decode(&bytes).unwrap();
            assert_eq!(back, tx);
            assert_eq!(codec::encode(&back).unwrap(), bytes);
        }
    }

    for _ in 0..100 {
        let seed = Seed::from_entropy(g.rng.gen());
        let mut tx = random_payment(&mut g);
        tx.insert("Account".into(), json!(seed.keypair().address().as_str()));
        let signed = sign_json(&tx, &seed).unwrap();
        let mut blob = hex::decode(&signed.tx_blob).unwrap();
        assert_eq!(signed.hash, tx_hash(&blob));
        let decoded = verify_signed_blob(&blob).unwrap();
        assert_eq!(decoded["Amount"], tx["Amount"]);
        let at = g.rng.gen_range(0..blob.len());
        blob[at] ^= 1 << g.rng.gen_range(0..8);
        assert!(verify_signed_blob(&blob).is_err(), "tampered byte {at} still verifies");
    }

    let seed = Seed::parse(VECTOR_SEED).unwrap();
    assert_eq!(seed.encode(), VECTOR_SEED);
    let kp = seed.keypair();
    assert_eq!(kp.address().as_str(), VECTOR_ACCOUNT);
    assert_eq!(kp.public_key_hex(), VECTOR_PUBLIC_KEY);
    let mut tx = Map::new();
    tx.insert("TransactionType".into(), json!("Payment"));
    tx.insert("Account".into(), json!(VECTOR_ACCOUNT));
    tx.insert("Destination".into(), json!(FIXTURES[1]));
    tx.insert("Amount".into(), json!("10000000"));
    tx.insert("Fee".into(), json!("12"));
    tx.insert("Flags".into(), json!(0));
    tx.insert("Sequence".into(), json!(7));
    tx.insert("NetworkID".into(), json!(21338));
    let signed = sign_json(&tx, &seed).unwrap();
    assert_eq!(signed.tx_blob, VECTOR_BLOB);
    assert_eq!(signed.hash, VECTOR_HASH);
    verify_signed_blob(&hex::decode(VECTOR_BLOB).unwrap()).unwrap();
}

fn c7_end_to_end() {
    let compiler = serve_mock_compiler(0).unwrap();
    let faucet = serve_mock_faucet(0, FaucetOptions::default()).unwrap();
    let node = serve_mock_node(0, NodeOptions::default()).unwrap();

    let source = generate(&example("accept-all")).unwrap();
    let CompileOutcome::Artifact(artifact) = compile_c(&source, &compiler.config()).unwrap() else {
        panic!("mock compiler refused the golden C")
    };
    let account = faucet_create_account(&faucet.url(), T).unwrap();
    let sequence = account_sequence(&account.address, &node.url(), T).unwrap();
    let tx = build_sethook_tx(&account.address, &artifact, sequence, 10, &SetHookOptions::default()).unwrap();
    let signed = sign_tx(&tx, &account).unwrap();
    let result = submit(&signed.tx_blob, &node.url(), T).unwrap();
    assert_eq!(result.status, SubmitStatus::Success);
    let hash = result.tx_hash.unwrap();
    assert_eq!(hash.len(), 64);
    assert_eq!(hash, signed.hash);

    // compiler failure paths
    let mut broken = source.clone();
    broken.text = broken.text.replace("accept(SBUF(\"Accepted!\"),1);", "accept(SBUF(\"Accepted!\"),1)");
    let CompileOutcome::Errors(errors) = compile_c(&broken, &compiler.config()).unwrap() else { panic!("expected errors") };
    assert_eq!(errors[0].mapped_block_id.as_deref(), Some("accept"));
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let gone = CompilerConfig { url: format!("http://127.0.0.1:{port}/compile"), timeout: T };
    assert_eq!(compile_c(&source, &gone).unwrap_err().code(), "ENDPOINT_UNREACHABLE");

    // node failure paths
    let picky = serve_mock_node(0, NodeOptions { min_fee_drops: 1_000, ..Default::default() }).unwrap();
    let r = submit(&signed.tx_blob, &picky.url(), T).unwrap();
    assert_eq!((r.status, r.engine_code.as_str()), (SubmitStatus::Failure, "telINSUF_FEE_P"));
    let err = submit(&signed.tx_blob, &format!("http://127.0.0.1:{port}/"), T).unwrap_err();
    assert_eq!(err.code(), "NODE_UNREACHABLE");

    let secret = account.expose_secret();
    let traffic = [compiler.requests(), faucet.requests(), node.requests(), picky.requests()].concat();
    assert!(traffic.iter().all(|body| !body.contains(secret)), "the account secret left the client");
}

fn main() {
    let criteria: [(&str, fn()); 7] = [
        ("accept-all C matches the golden file", c1_accept_all_golden),
        ("carbon-offset sends 1% and conserves drops", c2_carbon_offset),
        ("deny-under-20 and blacklist decisions", c3_example_decisions),
        ("termination soundness and guard violations", c4_termination_soundness),
        ("conservation and atomicity", c5_conservation_and_atomicity),
        ("workspace, codec and signing round-trips", c6_round_trips),
        ("end-to-end pipeline against mocks", c7_end_to_end),
    ];
    let mut failed = 0;
    for (n, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let ok = catch_unwind(AssertUnwindSafe(check)).is_ok();
        failed += usize::from(!ok);
        println!("criterion {}: {} {name} ({:.2?})", n + 1, if ok { "PASS" } else { "FAIL" }, started.elapsed());
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
