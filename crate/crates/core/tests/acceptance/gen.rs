//! Seeded generators for catalog-valid programs, guard violations and scenarios.

use hookforge::address::{AccountAddress, AccountId};
use hookforge::block_ir::catalog::{ARITHMETIC_OPS, COMPARE_OPS, LOGIC_OPS};
use hookforge::block_ir::{chain, Block, BlockKind as K, BlockProgram};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FIXTURES: [&str; 5] = [
    "rhzFipyh5UsycxUjaPzR1RkTJZp9VybKAz",
    "rUFiTVw3LSgEqrHV7yPL4nZ1n6f6QgjjfU",
    "rh5xKqHZ9VFXkqFvddpWDF6L29NUdXrAVq",
    "rJZbuiiJFaA2kfhvPTHqL3sJQ9DhQC4Vja",
    "rfAetmdrVkPrSdthFd8qTMqruNvWkKvw4e",
];

const KEYS: &[&str] = &["count", "total", "k", "last_amount"];
const VARS: &[&str] = &["x", "y", "acc"];
const PALETTE: &[char] = &['a', 'Z', '0', ' ', '.', ':', '"', '\\', '\'', '%', '\n', '\t', 'é', '₿', '漢'];
const MAX_DEPTH: u32 = 3;

pub struct Gen {
    pub rng: ChaCha8Rng,
    next_id: u64,
    next_guard: i64,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Entry {
    Hook,
    Cbak,
}

impl Gen {
    pub fn new(seed: u64) -> Self {
        Gen { rng: ChaCha8Rng::seed_from_u64(seed), next_id: 0, next_guard: 0 }
    }

    fn id(&mut self, kind: K) -> String {
        self.next_id += 1;
        format!("{}_{}", kind.as_str(), self.next_id)
    }

    fn block(&mut self, kind: K) -> Block {
        let id = self.id(kind);
        Block::new(id, kind)
    }

    pub fn fresh_guard_id(&mut self) -> i64 {
        self.next_guard += 1;
        self.next_guard
    }

    pub fn address(&mut self) -> AccountAddress {
        if self.rng.gen_bool(0.85) {
            AccountAddress::parse(FIXTURES.choose(&mut self.rng).unwrap()).unwrap()
        } else {
            AccountId(self.rng.gen()).to_address()
        }
    }

    pub fn text(&mut self, max_bytes: usize) -> String {
        let len = self.rng.gen_range(0..24);
        let mut s = String::new();
        for _ in 0..len {
            let c = *PALETTE.choose(&mut self.rng).unwrap();
            if s.len() + c.len_utf8() > max_bytes {
                break;
            }
            s.push(c);
        }
        s
    }

    fn pick(&mut self, options: &[&str]) -> String {
        options.choose(&mut self.rng).unwrap().to_string()
    }

    pub fn guard(&mut self, maxiter: i64) -> Block {
        let gid = self.fresh_guard_id();
        self.block(K::Guard).with_field("ID", gid).with_field("MAXITER", maxiter)
    }

    fn literal_number(&mut self) -> Block {
        let n: i64 = match self.rng.gen_range(0..4) {
            0 => self.rng.gen_range(0..100),
            1 => self.rng.gen_range(-1_000..1_000),
            2 => self.rng.gen_range(0..50_000_000),
            _ => self.rng.gen(),
        };
        self.block(K::LiteralNumber).with_field("NUM", n).with_field("UNIT", "DROPS")
    }

    fn number(&mut self, depth: u32, entry: Entry) -> Block {
        let leaf = depth >= MAX_DEPTH || self.rng.gen_bool(0.5);
        let choice = if leaf { self.rng.gen_range(0..5) } else { self.rng.gen_range(0..7) };
        match choice {
            0 => self.literal_number(),
            1 => self.block(K::OtxnAmount),
            2 => {
                let key = self.pick(KEYS);
                self.block(K::StateGet).with_field("KEY", key.as_str())
            }
            3 => {
                let var = self.pick(VARS);
                self.block(K::VarGet).with_field("VAR", var.as_str())
            }
            4 if entry == Entry::Cbak => self.block(K::EmitResult),
            4 => self.literal_number(),
            5 => {
                let op = self.pick(ARITHMETIC_OPS);
                let a = self.number(depth + 1, entry);
                let b = self.number(depth + 1, entry);
                self.block(K::Arithmetic).with_field("OP", op.as_str()).with_input("A", a).with_input("B", b)
            }
            _ => {
                let pct = self.rng.gen_range(0..=100);
                let v = self.number(depth + 1, entry);
                self.block(K::PercentOf).with_field("PERCENT", pct).with_input("VALUE", v)
            }
        }
    }

    fn account(&mut self) -> Block {
        match self.rng.gen_range(0..4) {
            0 => self.block(K::OtxnAccount),
            1 => self.block(K::OtxnDestination),
            2 => self.block(K::HookAccount),
            _ => {
                let a = self.address();
                self.block(K::LiteralAccount).with_field("ADDRESS", a)
            }
        }
    }

    fn boolean(&mut self, depth: u32, entry: Entry) -> Block {
        let leaf = depth >= MAX_DEPTH;
        match self.rng.gen_range(0..if leaf { 3 } else { 5 }) {
            0 => {
                let op = self.pick(COMPARE_OPS);
                let a = self.number(depth + 1, entry);
                let b = self.number(depth + 1, entry);
                self.block(K::Compare).with_field("OP", op.as_str()).with_input("A", a).with_input("B", b)
            }
            1 => {
                let a = self.account();
                let b = self.account();
                self.block(K::AccountEquals).with_input("A", a).with_input("B", b)
            }
            2 => {
                let n = self.rng.gen_range(0..4);
                let list: Vec<AccountAddress> = (0..n).map(|_| self.address()).collect();
                let a = self.account();
                self.block(K::AccountListContains).with_field("LIST", list).with_input("ACCOUNT", a)
            }
            3 => {
                let op = self.pick(LOGIC_OPS);
                let a = self.boolean(depth + 1, entry);
                let b = self.boolean(depth + 1, entry);
                self.block(K::LogicOperation).with_field("OP", op.as_str()).with_input("A", a).with_input("B", b)
            }
            _ => {
                let b = self.boolean(depth + 1, entry);
                self.block(K::LogicNegate).with_input("BOOL", b)
            }
        }
    }

    fn terminal(&mut self) -> Block {
        let kind = if self.rng.gen_bool(0.6) { K::Accept } else { K::Rollback };
        let msg = self.text(40);
        let code: i64 = self.rng.gen_range(-5..5);
        self.block(kind).with_field("MSG", msg.as_str()).with_field("CODE", code)
    }

    fn statement(&mut self, depth: u32, entry: Entry) -> Block {
        let simple = depth >= MAX_DEPTH;
        loop {
            let choice = self.rng.gen_range(0..if simple { 5 } else { 8 });
            return match choice {
                0 => {
                    let msg = self.text(60);
                    let mut t = self.block(K::Trace).with_field("MSG", msg.as_str());
                    match self.rng.gen_range(0..4) {
                        0 => {}
                        1 => t = t.with_input("VALUE", self.number(depth + 1, entry)),
                        2 => t = t.with_input("VALUE", self.account()),
                        _ => {
                            let text = self.text(30);
                            t = t.with_input("VALUE", self.block(K::LiteralText).with_field("TEXT", text.as_str()))
                        }
                    }
                    t
                }
                1 => {
                    let key = self.pick(KEYS);
                    let v = self.number(depth + 1, entry);
                    self.block(K::StateSet).with_field("KEY", key.as_str()).with_input("VALUE", v)
                }
                2 => {
                    let var = self.pick(VARS);
                    let v = self.number(depth + 1, entry);
                    self.block(K::VarSet).with_field("VAR", var.as_str()).with_input("VALUE", v)
                }
                3 if entry == Entry::Hook => {
                    let d = self.account();
                    let a = self.number(depth + 1, entry);
                    self.block(K::EmitPayment).with_input("DESTINATION", d).with_input("AMOUNT", a)
                }
                3 => continue,
                4 => {
                    let max = self.rng.gen_range(1..4);
                    self.guard(max)
                }
                5 => {
                    let cond = self.boolean(depth + 1, entry);
                    let body = self.body(depth + 1, entry, false);
                    self.block(K::If).with_input("COND", cond).with_body("DO", body)
                }
                6 => {
                    let cond = self.boolean(depth + 1, entry);
                    let (t, e) = (self.rng.gen_bool(0.3), self.rng.gen_bool(0.3));
                    let then = self.body(depth + 1, entry, t);
                    let other = self.body(depth + 1, entry, e);
                    self.block(K::IfElse).with_input("COND", cond).with_body("DO", then).with_body("ELSE", other)
                }
                _ => {
                    let count = self.rng.gen_range(1..6);
                    // maxiter below count makes the guard trip at run time
                    let max = self.rng.gen_range(1..8);
                    let guard = self.guard(max);
                    let mut body = vec![guard];
                    body.extend(self.body(depth + 1, entry, false));
                    self.block(K::Repeat).with_field("COUNT", count).with_body("DO", body)
                }
            };
        }
    }

    fn body(&mut self, depth: u32, entry: Entry, terminate: bool) -> Vec<Block> {
        let n = self.rng.gen_range(0..4);
        let mut stmts: Vec<Block> = (0..n).map(|_| self.statement(depth, entry)).collect();
        if terminate {
            stmts.push(self.terminal());
        }
        stmts
    }

    fn entry_chain(&mut self, entry: Entry) -> Vec<Block> {
        let mut stmts = self.body(0, entry, false);
        let at = self.rng.gen_range(0..=stmts.len());
        stmts.insert(at, self.guard(1));
        stmts.extend(self.body(0, entry, false));
        if entry == Entry::Hook {
            stmts.push(self.terminal());
        }
        stmts
    }

    /// A guard-clean, validation-clean program.
    pub fn program(&mut self) -> BlockProgram {
        let mut hook = self.block(K::HookEntry);
        hook.next = chain(self.entry_chain(Entry::Hook)).map(Box::new);
        let mut blocks = vec![hook];
        if self.rng.gen_bool(0.4) {
            let mut cbak = self.block(K::CbakEntry);
            cbak.next = chain(self.entry_chain(Entry::Cbak)).map(Box::new);
            blocks.push(cbak);
        }
        blocks.shuffle(&mut self.rng);
        let name = self.text(30);
        let description = self.text(60);
        BlockProgram::new(blocks).with_metadata(&name, &description)
    }

    /// Any catalog-valid program: clean ones plus parked fragments and empty
    /// optional or required sockets.
    pub fn any_program(&mut self) -> BlockProgram {
        let mut p = self.program();
        for _ in 0..self.rng.gen_range(0..3) {
            let fragment = match self.rng.gen_range(0..4) {
                0 => self.number(1, Entry::Hook),
                1 => self.boolean(1, Entry::Hook),
                2 => self.statement(1, Entry::Hook),
                _ => {
                    let mut e = self.block(K::EmitPayment);
                    if self.rng.gen_bool(0.5) {
                        e = e.with_input("AMOUNT", self.number(1, Entry::Hook));
                    }
                    e
                }
            };
            p.blocks.push(fragment);
        }
        p
    }
}

/// Pre-order visit of every block in the chain starting at `b`.
pub fn visit_mut(b: &mut Block, f: &mut dyn FnMut(&mut Block)) {
    f(b);
    for child in b.inputs.values_mut().flatten() {
        visit_mut(child, f);
    }
    if let Some(next) = b.next.as_deref_mut() {
        visit_mut(next, f);
    }
}

fn unchain(head: Option<Box<Block>>) -> Vec<Block> {
    let mut out = Vec::new();
    let mut cur = head;
    while let Some(mut b) = cur {
        cur = b.next.take();
        out.push(*b);
    }
    out
}

fn strip_guards(head: Option<Box<Block>>) -> Option<Box<Block>> {
    let kept: Vec<Block> = unchain(head)
        .into_iter()
        .filter(|b| b.kind != K::Guard)
        .map(|mut b| {
            for socket in b.entry().inputs {
                if socket.ty == hookforge::block_ir::SocketType::Statement {
                    let body = b.inputs.get_mut(socket.name).unwrap().take();
                    *b.inputs.get_mut(socket.name).unwrap() = strip_guards(body);
                }
            }
            b
        })
        .collect();
    chain(kept).map(Box::new)
}

pub const INJECTED_CLASSES: &[&str] = &[
    "GUARD_ABSENT",
    "LOOP_UNGUARDED",
    "GUARD_BOUND_NONPOSITIVE",
    "GUARD_BOUND_TOO_LARGE",
    "GUARD_BOUND_NONCONST",
    "GUARD_ID_REUSE",
    "GUARD_ID_INVALID",
    "STEP_BOUND_EXCEEDED",
];

/// Breaks a clean program so that it violates `class`.
pub fn inject(gen: &mut Gen, program: &mut BlockProgram, class: &str) {
    let hook = program.blocks.iter_mut().find(|b| b.kind == K::HookEntry).unwrap();
    let insert = |gen: &mut Gen, hook: &mut Block, stmt: Block| {
        let mut stmts = unchain(hook.next.take());
        let at = gen.rng.gen_range(0..stmts.len());
        stmts.insert(at, stmt);
        hook.next = chain(stmts).map(Box::new);
    };
    let nth_guard = |gen: &mut Gen, hook: &mut Block, f: &mut dyn FnMut(&mut Block)| {
        let mut count = 0;
        visit_mut(hook, &mut |b| count += usize::from(b.kind == K::Guard));
        let target = gen.rng.gen_range(0..count);
        let mut seen = 0;
        visit_mut(hook, &mut |b| {
            if b.kind == K::Guard {
                if seen == target {
                    f(b);
                }
                seen += 1;
            }
        });
    };
    match class {
        "GUARD_ABSENT" => hook.next = strip_guards(hook.next.take()),
        "LOOP_UNGUARDED" => {
            let count = gen.rng.gen_range(1..10);
            let t = gen.block(K::Trace).with_field("MSG", "loop");
            let repeat = gen.block(K::Repeat).with_field("COUNT", count).with_body("DO", vec![t]);
            insert(gen, hook, repeat);
        }
        "GUARD_BOUND_NONPOSITIVE" => {
            let v = -gen.rng.gen_range(0..1_000i64);
            nth_guard(gen, hook, &mut |b| {
                b.fields.insert("MAXITER".into(), v.into());
            });
        }
        "GUARD_BOUND_TOO_LARGE" => {
            let v = gen.rng.gen_range(i32::MAX as i64 + 1..i64::MAX);
            nth_guard(gen, hook, &mut |b| {
                b.fields.insert("MAXITER".into(), v.into());
            });
        }
        "GUARD_BOUND_NONCONST" => nth_guard(gen, hook, &mut |b| {
            b.fields.remove("MAXITER");
        }),
        "GUARD_ID_REUSE" => {
            let mut ids = Vec::new();
            visit_mut(hook, &mut |b| {
                if b.kind == K::Guard {
                    ids.push(b.field("ID").unwrap().as_integer().unwrap());
                }
            });
            let id = *ids.choose(&mut gen.rng).unwrap();
            let g = gen.block(K::Guard).with_field("ID", id).with_field("MAXITER", 1);
            insert(gen, hook, g);
        }
        "GUARD_ID_INVALID" => {
            let v = -gen.rng.gen_range(1..1_000_000i64);
            nth_guard(gen, hook, &mut |b| {
                b.fields.insert("ID".into(), v.into());
            });
        }
        "STEP_BOUND_EXCEEDED" => {
            let n = gen.rng.gen_range(70_000..1_000_000);
            let guard = gen.guard(n);
            let t = gen.block(K::Trace).with_field("MSG", "spin");
            let repeat = gen.block(K::Repeat).with_field("COUNT", n).with_body("DO", vec![guard, t]);
            insert(gen, hook, repeat);
        }
        other => panic!("unknown class {other}"),
    }
}
