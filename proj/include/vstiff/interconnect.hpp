#pragma once

#include <map>
#include <string>
#include <vector>

#include "vstiff/state_space.hpp"

namespace vstiff {

/// A named block in an interconnection. Output labels must be unique across all
/// blocks; input labels are local to the block.
struct Block {
  std::string name;
  StateSpaceModel sys;
};

/// Explicit summing connection: `block.input += gain * signal`.
struct Connection {
  std::string block;
  std::string input;
  std::string signal;
  double gain = 1.0;
};

/// Interconnects blocks by signal name. A block input named `x` is driven by the
/// signal `x` (another block's output or an external input) when one exists;
/// explicit connections add further terms. Every block input must end up driven.
///
/// Throws UnresolvedSignal for dangling names and IllPosedLoop when the
/// direct-feedthrough loop I - D*M is singular.
inline StateSpaceModel connect(const std::vector<Block>& blocks, const std::vector<Connection>& wiring,
                               const std::vector<std::string>& external_inputs,
                               const std::vector<std::string>& external_outputs) {
  // Global signal table: block outputs first, then external inputs.
  std::map<std::string, Eigen::Index> output_slot;
  std::vector<Eigen::Index> state_offset, input_offset, output_offset;
  Eigen::Index n = 0, m = 0, p = 0;
  for (const auto& blk : blocks) {
    state_offset.push_back(n);
    input_offset.push_back(m);
    output_offset.push_back(p);
    const auto& outs = blk.sys.outputs();
    for (std::size_t i = 0; i < outs.size(); ++i) {
      if (!output_slot.emplace(outs[i], p + static_cast<Eigen::Index>(i)).second)
        throw InvalidArgument("connect: output '" + outs[i] + "' produced by more than one block");
    }
    n += blk.sys.states();
    m += static_cast<Eigen::Index>(blk.sys.inputs().size());
    p += static_cast<Eigen::Index>(blk.sys.outputs().size());
  }
  std::map<std::string, Eigen::Index> external_slot;
  for (std::size_t k = 0; k < external_inputs.size(); ++k) {
    const auto& name = external_inputs[k];
    if (output_slot.count(name)) throw InvalidArgument("connect: external input '" + name + "' shadows a block output");
    if (!external_slot.emplace(name, static_cast<Eigen::Index>(k)).second)
      throw InvalidArgument("connect: duplicate external input '" + name + "'");
  }
  const auto w = static_cast<Eigen::Index>(external_inputs.size());

  // Block-diagonal stack.
  Matrix a = Matrix::Zero(n, n), b = Matrix::Zero(n, m), c = Matrix::Zero(p, n), d = Matrix::Zero(p, m);
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const auto& s = blocks[k].sys;
    const auto ns = s.states();
    const auto ms = static_cast<Eigen::Index>(s.inputs().size());
    const auto ps = static_cast<Eigen::Index>(s.outputs().size());
    a.block(state_offset[k], state_offset[k], ns, ns) = s.a();
    b.block(state_offset[k], input_offset[k], ns, ms) = s.b();
    c.block(output_offset[k], state_offset[k], ps, ns) = s.c();
    d.block(output_offset[k], input_offset[k], ps, ms) = s.d();
  }

  // Block inputs u = My * y + Mw * w.
  Matrix my = Matrix::Zero(m, p), mw = Matrix::Zero(m, w);
  std::vector<bool> driven(static_cast<std::size_t>(m), false);
  auto add_term = [&](Eigen::Index row, const std::string& signal, double gain) {
    if (auto it = output_slot.find(signal); it != output_slot.end()) {
      my(row, it->second) += gain;
    } else if (auto jt = external_slot.find(signal); jt != external_slot.end()) {
      mw(row, jt->second) += gain;
    } else {
      throw UnresolvedSignal(signal);
    }
    driven[static_cast<std::size_t>(row)] = true;
  };
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const auto& ins = blocks[k].sys.inputs();
    for (std::size_t i = 0; i < ins.size(); ++i) {
      const auto row = input_offset[k] + static_cast<Eigen::Index>(i);
      if (output_slot.count(ins[i]) || external_slot.count(ins[i])) add_term(row, ins[i], 1.0);
    }
  }
  for (const auto& conn : wiring) {
    auto it = std::find_if(blocks.begin(), blocks.end(), [&](const Block& blk) { return blk.name == conn.block; });
    if (it == blocks.end()) throw UnresolvedSignal(conn.block + "." + conn.input);
    const auto k = static_cast<std::size_t>(it - blocks.begin());
    const auto row = input_offset[k] + it->sys.input_index(conn.input);
    add_term(row, conn.signal, conn.gain);
  }
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const auto& ins = blocks[k].sys.inputs();
    for (std::size_t i = 0; i < ins.size(); ++i)
      if (!driven[static_cast<std::size_t>(input_offset[k]) + i])
        throw UnresolvedSignal(blocks[k].name + "." + ins[i]);
  }

  // y = F (C x + D Mw w), F = (I - D My)^-1.
  const Matrix loop = Matrix::Identity(p, p) - d * my;
  Eigen::FullPivLU<Matrix> lu(loop);
  lu.setThreshold(1e-12);
  if (p > 0 && !lu.isInvertible()) throw IllPosedLoop("connect: algebraic loop I - D*M is singular");
  const Matrix fc = p > 0 ? Matrix(lu.solve(c)) : Matrix(0, n);
  const Matrix fdw = p > 0 ? Matrix(lu.solve(d * mw)) : Matrix(0, w);

  const Matrix a_cl = a + b * my * fc;
  const Matrix b_cl = b * (my * fdw + mw);

  // External outputs select from y or pass through w.
  const auto q = static_cast<Eigen::Index>(external_outputs.size());
  Matrix c_out = Matrix::Zero(q, n), d_out = Matrix::Zero(q, w);
  for (Eigen::Index r = 0; r < q; ++r) {
    const auto& name = external_outputs[static_cast<std::size_t>(r)];
    if (auto it = output_slot.find(name); it != output_slot.end()) {
      c_out.row(r) = fc.row(it->second);
      d_out.row(r) = fdw.row(it->second);
    } else if (auto jt = external_slot.find(name); jt != external_slot.end()) {
      d_out(r, jt->second) = 1.0;
    } else {
      throw UnresolvedSignal(name);
    }
  }
  return StateSpaceModel(a_cl, b_cl, c_out, d_out, external_inputs, external_outputs);
}

}  // namespace vstiff
