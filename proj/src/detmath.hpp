#pragma once

namespace tcat {

// Deterministic binary32 exp/log used on the replayed training path.
// Fixed operation order, no platform libm, no FMA (compiled with
// -ffp-contract=off), so results are bit-identical across conforming
// IEEE-754 implementations. Accuracy is a few ulp, which is sufficient
// because prover and verifier run the same code, not because the values
// are correctly rounded.
float det_exp(float x);
float det_log(float x);

}  // namespace tcat
