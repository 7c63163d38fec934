#!/usr/bin/env node
// Single-use SMT-LIB evaluator backed by the z3-solver WebAssembly build.
//
// Protocol: the process initializes the WASM runtime, prints "READY" on
// stdout, then reads one SMT-LIB v2 script from stdin (until EOF) and
// prints the solver output.  The process exits after one query; callers
// that need isolation or timeouts simply kill it.
//
// Before signalling READY the wrapper runs a few throwaway queries on
// scratch contexts.  The WASM engine compiles hot paths incrementally,
// so exercising the parser and both quantified and quantifier-free
// nonlinear solving up front cuts the first real solve from roughly
// 0.4s to well under 0.1s.  Callers keep a pool of prewarmed processes,
// which hides this startup work entirely.
'use strict';

const { init } = require('z3-solver');

const WARMUP = [
  `(set-logic NRA)
(declare-const w Real)
(assert (forall ((u Real) (v Real)) (=> (> (+ (* u u) (* v v)) 0) (and (> (+ (* w u u) (* w v v)) 0) (< (+ (* (- 2) w u u u u) (* (- 2) w v v v v)) 0)))))
(check-sat)
(get-value (w))`,
  `(set-logic QF_NRA)
(declare-const u Real)
(declare-const v Real)
(assert (> (+ (* u u) (* v v)) 0))
(assert (>= (+ (* 2 u u u u) (* (- 3) u v) (* 5 v v v v)) 0))
(check-sat)
(get-value (u v))`,
];

async function main() {
  const { Z3 } = await init();
  for (const script of WARMUP) {
    const cfg = Z3.mk_config();
    const ctx = Z3.mk_context(cfg);
    try {
      await Z3.eval_smtlib2_string(ctx, script);
    } catch (err) {
      // warm-up failures are irrelevant; the real query decides
    }
  }
  const cfg = Z3.mk_config();
  const ctx = Z3.mk_context(cfg);

  process.stdout.write('READY\n');

  const chunks = [];
  for await (const chunk of process.stdin) {
    chunks.push(chunk);
  }
  const script = Buffer.concat(chunks).toString('utf8');

  let out;
  try {
    out = await Z3.eval_smtlib2_string(ctx, script);
  } catch (err) {
    out = '(error "' + String(err).replace(/"/g, "'") + '")';
  }
  if (!out.endsWith('\n')) {
    out += '\n';
  }
  process.stdout.write(out);
  process.exit(0);
}

main().catch((err) => {
  process.stderr.write(String(err) + '\n');
  process.exit(2);
});
