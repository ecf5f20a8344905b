// Recurrent cells of the hierarchy.
//
// time-aware GRU (within a session, one step per event):
//   c   = [x; h; x_week; x_month]
//   u   = sigmoid(W_u c + b_u)
//   r   = sigmoid(W_r c + b_r)
//   p   = tanh(W_p [x; h; x_week; x_month; r.h] + b_p)
//   T   = sigmoid(W_m (x + sigmoid(Q dt)) + b_m)
//   h'  = (1 - u).h + p.T.u
//
// user-item-aware GRU (over session intentions):
//   c   = [T_i; h; x_user; x_item]
//   u   = sigmoid(W_u c + b_u),  r = sigmoid(W_r c + b_r)
//   p   = tanh(W_p [T_i; x_user; x_item; r.h] + b_p)
//   h'  = (1 - u).h + p.u
//
// The standard GRU (used by the ablation variants) drops the extra inputs:
//   u, r over [x; h],  p = tanh(W_p [x; r.h] + b_p),  h' = (1 - u).h + p.u
//
// All cells start from the zero state; an empty sequence encodes to zero.
#pragma once

#include <span>
#include <vector>

#include "huihen/tape.hpp"

namespace huihen {

struct TimeAwareGruVars {
  Var w_u, w_r, w_p, w_m, q;
  Var b_u, b_r, b_p, b_m;
};

struct UserItemGruVars {
  Var w_u, w_r, w_p;
  Var b_u, b_r, b_p;
};

struct StandardGruVars {
  Var w_u, w_r, w_p;
  Var b_u, b_r, b_p;
};

// Input dimensions of each weight matrix, for parameter allocation.
struct TimeAwareGruDims {
  std::size_t input, hidden, time;
  std::size_t gate_cols() const { return input + hidden + 2 * time; }
  std::size_t candidate_cols() const { return gate_cols() + hidden; }
};

struct UserItemGruDims {
  std::size_t input, hidden, user, item;
  std::size_t gate_cols() const { return input + hidden + user + item; }
  std::size_t candidate_cols() const { return input + user + item + hidden; }
};

struct StandardGruDims {
  std::size_t input, hidden;
  std::size_t gate_cols() const { return input + hidden; }
  std::size_t candidate_cols() const { return input + hidden; }
};

template <class Real>
Var gated_update(Tape<Real>& tape, Var h, Var u, Var candidate) {
  // (1 - u).h + candidate.u, written as h - u.h so that u = 0.5 halves h exactly.
  return tape.add(tape.sub(h, tape.mul(u, h)), tape.mul(candidate, u));
}

template <class Real>
Var time_aware_step(Tape<Real>& tape, const TimeAwareGruVars& v, Var x, Var h, Var x_week,
                    Var x_month, Real dt) {
  Var c = tape.concat({x, h, x_week, x_month});
  Var u = tape.sigmoid(tape.add(tape.matmul(v.w_u, c), v.b_u));
  Var r = tape.sigmoid(tape.add(tape.matmul(v.w_r, c), v.b_r));
  Var rh = tape.mul(r, h);
  Var c_p = tape.concat({x, h, x_week, x_month, rh});
  Var p = tape.tanh(tape.add(tape.matmul(v.w_p, c_p), v.b_p));
  Var interval = tape.sigmoid(tape.scale(v.q, dt));
  Var gate = tape.sigmoid(tape.add(tape.matmul(v.w_m, tape.add(x, interval)), v.b_m));
  return gated_update(tape, h, u, tape.mul(p, gate));
}

template <class Real>
Var user_item_step(Tape<Real>& tape, const UserItemGruVars& v, Var t, Var h, Var x_user,
                   Var x_item) {
  Var c = tape.concat({t, h, x_user, x_item});
  Var u = tape.sigmoid(tape.add(tape.matmul(v.w_u, c), v.b_u));
  Var r = tape.sigmoid(tape.add(tape.matmul(v.w_r, c), v.b_r));
  Var c_p = tape.concat({t, x_user, x_item, tape.mul(r, h)});
  Var p = tape.tanh(tape.add(tape.matmul(v.w_p, c_p), v.b_p));
  return gated_update(tape, h, u, p);
}

template <class Real>
Var standard_gru_step(Tape<Real>& tape, const StandardGruVars& v, Var x, Var h) {
  Var c = tape.concat({x, h});
  Var u = tape.sigmoid(tape.add(tape.matmul(v.w_u, c), v.b_u));
  Var r = tape.sigmoid(tape.add(tape.matmul(v.w_r, c), v.b_r));
  Var c_p = tape.concat({x, tape.mul(r, h)});
  Var p = tape.tanh(tape.add(tape.matmul(v.w_p, c_p), v.b_p));
  return gated_update(tape, h, u, p);
}

// A real (non-pad) event of a session, already field-transformed.
struct SessionStep {
  Var x;
  Var x_week;
  Var x_month;
  double dt = 0.0;
};

template <class Real>
Var encode_session(Tape<Real>& tape, const TimeAwareGruVars& v, std::span<const SessionStep> steps,
                   std::size_t hidden) {
  Var h = tape.zeros(Shape::vec(hidden));
  for (const auto& s : steps)
    h = time_aware_step(tape, v, s.x, h, s.x_week, s.x_month, static_cast<Real>(s.dt));
  return h;
}

template <class Real>
Var encode_history(Tape<Real>& tape, const UserItemGruVars& v, std::span<const Var> intentions,
                   Var x_user, Var x_item, std::size_t hidden) {
  Var h = tape.zeros(Shape::vec(hidden));
  for (Var t : intentions) h = user_item_step(tape, v, t, h, x_user, x_item);
  return h;
}

template <class Real>
Var encode_standard(Tape<Real>& tape, const StandardGruVars& v, std::span<const Var> inputs,
                    std::size_t hidden) {
  Var h = tape.zeros(Shape::vec(hidden));
  for (Var x : inputs) h = standard_gru_step(tape, v, x, h);
  return h;
}

}  // namespace huihen
