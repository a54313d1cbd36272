//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Run with `cargo test -p balise-core --test acceptance`.

use std::path::PathBuf;
use std::time::Instant;

use balise::auth::{derive_keys, generate_tag, verify_aligned, MasterKey};
use balise::sim::{
    run_scenario, ControllerMode, DbzStrategy, HoaState, ScenarioConfig, SimError, SimResult,
};
use balise::telegram::{
    derive_scrambling_key_legacy, BaliseId, Codec, GeneratorPolynomial, ScramblingBits,
    ScramblingKey, Telegram, TelegramFormat, UserData, CHECK_BITS, DEFAULT_EXPONENTS,
};
use balise::BitString;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed, TestRunner};
use std::sync::atomic::{AtomicUsize, Ordering};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GAMMA: f64 = 0.3;

static STALLED: AtomicUsize = AtomicUsize::new(0);

struct Report {
    failures: usize,
}

impl Report {
    fn line(&mut self, id: &str, name: &str, ok: bool, detail: String) {
        if !ok {
            self.failures += 1;
        }
        println!("{} [{id}] {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    }

    fn note(&self, id: &str, name: &str, ok: bool, detail: String) {
        println!("{} [{id}] {name}: {detail}", if ok { "SOFT-PASS" } else { "SOFT-MISS" });
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_bits(rng: &mut impl Rng, n: usize) -> BitString {
    (0..n).map(|_| rng.gen::<bool>()).collect()
}

fn encode_random(rng: &mut impl Rng, fmt: TelegramFormat) -> (BitString, ScramblingBits, u32, Telegram) {
    let user = random_bits(rng, fmt.user_bits());
    let sb = ScramblingBits::truncate(rng.gen());
    let key: u32 = rng.gen();
    let t = Codec::shared()
        .encode_bits(fmt, &user, sb, ScramblingKey(key))
        .unwrap();
    (user, sb, key, t)
}

fn criterion_1(r: &mut Report) {
    let start = Instant::now();
    let mut g = rng(101);
    let mut failures = 0;
    let per_format = 1000;
    for fmt in TelegramFormat::ALL {
        for _ in 0..per_format {
            let (user, sb, key, t) = encode_random(&mut g, fmt);
            let ok = Codec::shared()
                .decode_stream(&t.transmission(0, 3), fmt, |_| ScramblingKey(key))
                .map(|(u, got_sb)| u.bits() == &user && got_sb == sb)
                .unwrap_or(false);
            failures += usize::from(!ok);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    r.line(
        "1",
        "codec round trip",
        failures == 0 && secs < 10.0,
        format!("{per_format} payloads per format, {failures} failures, {secs:.2} s"),
    );
}

fn criterion_2(r: &mut Report) {
    let mut g = rng(102);
    let mut failures = 0;
    for k in 0..20 {
        let fmt = TelegramFormat::ALL[k % 2];
        let (user, sb, key, t) = encode_random(&mut g, fmt);
        for _ in 0..50 {
            let offset = g.gen_range(0..fmt.n());
            let ok = Codec::shared()
                .decode_stream(&t.transmission(offset, 3), fmt, |_| ScramblingKey(key))
                .map(|(u, got_sb)| u.bits() == &user && got_sb == sb)
                .unwrap_or(false);
            failures += usize::from(!ok);
        }
    }
    r.line(
        "2",
        "rotation transparency",
        failures == 0,
        format!("20 payloads x 50 rotations, {failures} failures"),
    );
}

fn long_division(prefix: &[bool]) -> Vec<bool> {
    let mut g = [false; CHECK_BITS + 1];
    for &e in &DEFAULT_EXPONENTS {
        g[CHECK_BITS - e as usize] = true;
    }
    let mut w = prefix.to_vec();
    w.resize(prefix.len() + CHECK_BITS, false);
    for i in 0..prefix.len() {
        if w[i] {
            for (j, &c) in g.iter().enumerate() {
                w[i + j] ^= c;
            }
        }
    }
    w.split_off(prefix.len())
}

fn criterion_3(r: &mut Report) {
    let poly = GeneratorPolynomial::default();
    let mut g = rng(103);
    let mut mismatches = 0;
    for k in 0..500 {
        let fmt = TelegramFormat::ALL[k % 2];
        let prefix = random_bits(&mut g, fmt.n() - CHECK_BITS);
        if poly.check_bits(&prefix).as_slice() != long_division(prefix.as_slice()).as_slice() {
            mismatches += 1;
        }
    }
    r.line(
        "3",
        "check bits equal long-division oracle",
        mismatches == 0,
        format!("500 prefixes, {mismatches} mismatches"),
    );
}

fn master_key(seed: u64) -> MasterKey {
    let mut mk = [0u8; 32];
    rng(seed).fill(&mut mk);
    MasterKey::new(mk)
}

fn accepts(t: &Telegram, keys: &balise::auth::BaliseKeyPair) -> bool {
    let aligned = Codec::shared()
        .align(&t.transmission(0, 3), t.format())
        .expect("well-formed telegram");
    verify_aligned(&aligned, keys).is_ok()
}

fn criterion_4(r: &mut Report) {
    let keys = derive_keys(&master_key(104), BaliseId::new(321).unwrap(), 0);
    let codec = Codec::shared();
    let mut g = rng(1041);

    let trials = 100_000;
    let mut forged = 0;
    for _ in 0..trials {
        let fmt = TelegramFormat::Short;
        let user = UserData::new(fmt, random_bits(&mut g, fmt.user_bits())).unwrap();
        let sb = ScramblingBits::truncate(g.gen());
        let t = codec.encode(&user, sb, derive_scrambling_key_legacy(sb)).unwrap();
        forged += usize::from(accepts(&t, &keys));
    }
    let rate = forged as f64 / trials as f64;
    let (lo, hi) = (2f64.powi(-13), 2f64.powi(-11));
    r.line(
        "4a",
        "random-tag forgery rate",
        (lo..=hi).contains(&rate),
        format!("{forged}/{trials} = {rate:.3e}, bounds [{lo:.3e}, {hi:.3e}]"),
    );

    let trials = 10_000;
    let mut detected = 0;
    for k in 0..trials {
        let fmt = TelegramFormat::ALL[k % 2];
        let user = UserData::new(fmt, random_bits(&mut g, fmt.user_bits())).unwrap();
        let (sb, s) = generate_tag(&user, &keys);
        let mut bits = user.bits().clone();
        bits.flip(g.gen_range(0..fmt.user_bits()));
        // additive scrambling lets the attacker flip a payload bit without S
        let t = codec
            .encode(&UserData::new(fmt, bits).unwrap(), sb, s)
            .unwrap();
        detected += usize::from(!accepts(&t, &keys));
    }
    let rate = detected as f64 / trials as f64;
    r.line(
        "4b",
        "single-bit tampering detected",
        rate >= 0.999,
        format!("{detected}/{trials} = {:.4}%", rate * 100.0),
    );
}

fn criterion_5(r: &mut Report) {
    let keys = derive_keys(&master_key(105), BaliseId::new(9).unwrap(), 0);
    let mut g = rng(1051);
    let fmt = TelegramFormat::Long;
    let user = UserData::new(fmt, random_bits(&mut g, fmt.user_bits())).unwrap();
    let t = balise::auth::encode_authenticated(Codec::shared(), &user, &keys).unwrap();
    let aligned = Codec::shared().align(&t.transmission(0, 3), fmt).unwrap();
    let calls = 2000u32;

    let start = Instant::now();
    for _ in 0..calls {
        std::hint::black_box(generate_tag(std::hint::black_box(&user), &keys));
    }
    let tag = start.elapsed().as_secs_f64() / f64::from(calls);
    let start = Instant::now();
    for _ in 0..calls {
        std::hint::black_box(verify_aligned(std::hint::black_box(&aligned), &keys)).unwrap();
    }
    let verify = start.elapsed().as_secs_f64() / f64::from(calls);
    r.line(
        "5",
        "tag latency",
        tag < 1e-3 && verify < 1e-3,
        format!(
            "generate {:.4} ms, verify {:.4} ms per call",
            tag * 1e3,
            verify * 1e3
        ),
    );
}

fn scenario(name: &str) -> SimResult {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(format!("{name}.json"));
    let config = ScenarioConfig::load(&path).unwrap_or_else(|e| panic!("{name}: {e}"));
    run_scenario(&config).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn criteria_6_to_10(r: &mut Report) {
    let e = scenario("no_attack").stop_error;
    r.line(
        "6",
        "no-attack stop",
        e.abs() <= GAMMA,
        format!("stop error {e:+.3} m, |e| <= {GAMMA}"),
    );

    let e = scenario("tamper_b1_legacy").stop_error;
    r.line(
        "7",
        "tampered B1 (legacy)",
        within(e, -43.9, 1.0),
        format!("stop error {e:+.3} m, target -43.9 +/- 1.0"),
    );

    let full = scenario("clone_b1b2_legacy_fullbrake").stop_error;
    let ignore = scenario("clone_b1b2_legacy_ignore").stop_error;
    r.line(
        "8a",
        "cloned B1->B2, full brake",
        within(full, -21.8, 1.5),
        format!("stop error {full:+.3} m, target -21.8 +/- 1.5"),
    );
    r.line(
        "8b",
        "cloned B1->B2, ignore",
        within(ignore, -4.22, 0.5),
        format!("stop error {ignore:+.3} m, target -4.22 +/- 0.5"),
    );
    r.line(
        "8c",
        "ignore beats full brake",
        ignore.abs() < full.abs(),
        format!("|{ignore:.3}| < |{full:.3}|"),
    );

    let cases = [
        ("9a", "tamper_b1_resilient_pest120", 0.15, false),
        ("9b", "tamper_b1_resilient_pest80", 0.23, true),
        ("9c", "clone_b1b2_resilient", 0.15, false),
        ("9d", "clone_b1b2_resilient_pest80", 0.23, true),
    ];
    for (id, name, soft, expect_fallback) in cases {
        let res = scenario(name);
        let e = res.stop_error;
        let fell_back = res.trajectory.iter().any(|row| row.mode != ControllerMode::Default);
        r.line(
            id,
            name,
            e.abs() <= GAMMA && fell_back == expect_fallback,
            format!(
                "stop error {e:+.3} m, |e| <= {GAMMA}, conservative fallback {}",
                if fell_back { "yes" } else { "no" }
            ),
        );
        r.note(
            id,
            name,
            within(e, soft, 0.1),
            format!("stop error {e:+.3} m, soft target {soft} +/- 0.1"),
        );
    }

    let res = scenario("tamper_b1_auth_only");
    let e = res.stop_error;
    r.line(
        "10",
        "rejected B1 without system logic",
        within(e, 1.3, 0.5) && res.auth_failures == 1,
        format!(
            "stop error {e:+.3} m, target +1.3 +/- 0.5, {} auth failure(s)",
            res.auth_failures
        ),
    );
}

fn payload() -> impl Strategy<Value = (TelegramFormat, Vec<bool>, u16, u32)> {
    prop_oneof![Just(TelegramFormat::Long), Just(TelegramFormat::Short)].prop_flat_map(|f| {
        (
            Just(f),
            prop::collection::vec(any::<bool>(), f.user_bits()),
            0u16..=ScramblingBits::MAX,
            any::<u32>(),
        )
    })
}

fn sim_config() -> impl Strategy<Value = ScenarioConfig> {
    use balise::sim::{Attack, AuthMode, ControllerKind, TrainParams};
    let attack = prop_oneof![
        Just(None),
        (-99.0f64..-0.5).prop_map(|l| Some(Attack::Tamper { balise: 1, new_loc: l })),
        (1usize..=4).prop_map(|i| Some(Attack::Clone { src: i, dst: i + 1 })),
        (1usize..=5).prop_map(|i| Some(Attack::Unavailable { balise: i })),
    ];
    (
        6.0f64..14.0,
        0.2f64..0.8,
        0.1f64..0.6,
        attack,
        any::<(bool, bool, bool)>(),
        -25.0f64..25.0,
        any::<u64>(),
    )
        .prop_map(|(v0, td, tp, attack, (res, ign, auth), off, seed)| ScenarioConfig {
            train: TrainParams { v0, td, tp, ..TrainParams::default() },
            attacks: attack.into_iter().collect(),
            controller: if res { ControllerKind::Resilient } else { ControllerKind::Hoa },
            dbz_strategy: if ign { DbzStrategy::Ignore } else { DbzStrategy::FullBrake },
            auth_mode: if auth { AuthMode::Authenticated } else { AuthMode::Legacy },
            p_est0: Some(-100.0 + off),
            delta0: 15.0,
            seed,
            max_time_s: 5000.0,
            ..ScenarioConfig::default()
        })
}

/// Brake-only conservative mode entered at speed can crawl short of the
/// marker indefinitely; such runs carry no complete trajectory to check.
fn complete_run(c: &ScenarioConfig) -> Result<SimResult, TestCaseError> {
    match run_scenario(c) {
        Ok(r) => Ok(r),
        Err(SimError::Timeout { .. }) => {
            STALLED.fetch_add(1, Ordering::Relaxed);
            Err(TestCaseError::reject("stalled in conservative mode"))
        }
        Err(e) => Err(TestCaseError::fail(e.to_string())),
    }
}

fn run_property<S: Strategy>(
    r: &mut Report,
    id: &str,
    name: &str,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) {
    let cases = 1000;
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        rng_seed: RngSeed::Fixed(11),
        ..Config::default()
    });
    STALLED.store(0, Ordering::Relaxed);
    let outcome = runner.run(&strategy, test);
    let stalled = STALLED.load(Ordering::Relaxed);
    let detail = match &outcome {
        Ok(()) if stalled > 0 => {
            format!("{cases} cases ({stalled} stalled runs rejected)")
        }
        Ok(()) => format!("{cases} cases"),
        Err(e) => format!("{e}"),
    };
    r.line(id, name, outcome.is_ok(), detail);
}

fn criterion_11(r: &mut Report) {
    run_property(r, "11a", "alphabet closure", payload(), |(fmt, bits, sb, key)| {
        let codec = Codec::shared();
        let t = codec
            .encode_bits(fmt, &BitString::from_bools(bits), ScramblingBits::new(sb).unwrap(), ScramblingKey(key))
            .unwrap();
        for w in t.words() {
            prop_assert!(codec.table().contains(w));
        }
        Ok(())
    });
    run_property(r, "11b", "divisibility", payload(), |(fmt, bits, sb, key)| {
        let codec = Codec::shared();
        let t = codec
            .encode_bits(fmt, &BitString::from_bools(bits), ScramblingBits::new(sb).unwrap(), ScramblingKey(key))
            .unwrap();
        prop_assert!(codec.polynomial().divides(t.bits()));
        Ok(())
    });
    run_property(r, "11c", "kinematic consistency", sim_config(), |c| {
        let res = complete_run(&c)?;
        let dt = c.train.dt;
        for w in res.trajectory.windows(2) {
            if w[1].v > 0.0 {
                prop_assert!((w[1].v - w[0].v - w[1].alpha_actual * dt).abs() < 1e-9);
            }
            prop_assert!((w[1].p - w[0].p - w[1].v * dt).abs() < 1e-9);
        }
        Ok(())
    });
    run_property(r, "11d", "saturation", sim_config(), |c| {
        let res = complete_run(&c)?;
        let amax = c.train.alpha_max;
        for row in &res.trajectory {
            prop_assert!(row.alpha_actual >= amax && row.alpha_actual <= 0.0);
            prop_assert!(row.alpha_cmd <= 0.0);
        }
        Ok(())
    });
    run_property(
        r,
        "11e",
        "eta positivity",
        (0.01f64..5.0, prop::collection::vec((0.0f64..20.0, -150.0f64..0.0), 1..40)),
        |(eta0, steps)| {
            let mut h = HoaState::new(eta0, -1.0, DbzStrategy::Ignore);
            for (v, loc) in steps {
                h.on_balise(v, loc);
                prop_assert!(h.eta > 0.0);
            }
            Ok(())
        },
    );
    run_property(r, "11f", "determinism", sim_config(), |c| {
        prop_assert_eq!(complete_run(&c)?, complete_run(&c)?);
        Ok(())
    });
}

fn main() {
    let start = Instant::now();
    let mut report = Report { failures: 0 };
    criterion_1(&mut report);
    criterion_2(&mut report);
    criterion_3(&mut report);
    criterion_4(&mut report);
    criterion_5(&mut report);
    criteria_6_to_10(&mut report);
    criterion_11(&mut report);
    let secs = start.elapsed().as_secs_f64();
    report.line("11g", "suite wall time", secs < 120.0, format!("{secs:.1} s (< 120 s)"));
    if report.failures > 0 {
        println!("{} criteria failed", report.failures);
        std::process::exit(1);
    }
    println!("all criteria passed");
}
