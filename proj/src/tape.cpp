#include "tae/tape.hpp"

namespace tae {

const char* op_name(Op op) {
  switch (op) {
    case Op::leaf: return "leaf";
    case Op::matmul: return "matmul";
    case Op::transpose2: return "transpose";
    case Op::add: return "add";
    case Op::sub: return "sub";
    case Op::mul: return "mul";
    case Op::add_row: return "add_row";
    case Op::mul_col: return "mul_col";
    case Op::scale: return "scale";
    case Op::add_const: return "add_const";
    case Op::relu: return "relu";
    case Op::tanh_act: return "tanh";
    case Op::sigmoid: return "sigmoid";
    case Op::exp_elem: return "exp";
    case Op::log_elem: return "log";
    case Op::clamp: return "clamp";
    case Op::huber: return "huber";
    case Op::softmax_rows: return "softmax_rows";
    case Op::segment_softmax: return "segment_softmax";
    case Op::sum_all: return "sum_all";
    case Op::mean_all: return "mean_all";
    case Op::gather_rows: return "gather_rows";
    case Op::scatter_add_rows: return "scatter_add_rows";
    case Op::concat_rows: return "concat_rows";
    case Op::concat_cols: return "concat_cols";
    case Op::reshape: return "reshape";
    case Op::cumsum_rows: return "cumsum_rows";
  }
  return "?";
}

std::string Tape::describe(int id) const {
  const Node& n = nodes[id];
  std::string s = "node " + std::to_string(id) + " (" + op_name(n.op);
  if (!n.name.empty()) s += " '" + n.name + "'";
  return s + " " + shape_str(n.shape) + ")";
}

int Tape::push(Node n) {
  if (n.op != Op::leaf)
    n.needs_grad = (n.a >= 0 && nodes[n.a].needs_grad) || (n.b >= 0 && nodes[n.b].needs_grad);
  nodes.push_back(std::move(n));
  leafv.emplace_back();
  return int(nodes.size()) - 1;
}

void Tape::check2(int id) const {
  check_data(id >= 0 && id < size(), "tape: bad node id " + std::to_string(id));
}

static std::vector<int> as2d(const std::vector<int>& s, const std::string& name) {
  if (s.size() == 1) return {1, s[0]};
  check_data(s.size() == 2, "tape: leaf '" + name + "' must be rank 1 or 2, got " + shape_str(s));
  return s;
}

int Tape::param(const Array& a, const std::string& name) {
  check_numeric(a.all_finite(), "param '" + name + "' contains non-finite values");
  Node n;
  n.op = Op::leaf;
  n.shape = as2d(a.shape, name);
  n.needs_grad = true;
  n.name = name;
  int id = push(std::move(n));
  leafv[id] = a.v;
  return id;
}

int Tape::constant(const Array& a, const std::string& name) {
  check_numeric(a.all_finite(), "constant '" + name + "' contains non-finite values");
  Node n;
  n.op = Op::leaf;
  n.shape = as2d(a.shape, name);
  n.name = name;
  int id = push(std::move(n));
  leafv[id] = a.v;
  return id;
}

int Tape::constant(std::vector<int> shape, std::vector<float> v, const std::string& name) {
  return constant(Array(std::move(shape), std::move(v)), name);
}

int Tape::zeros(int r, int c) { return constant(Array::zeros({r, c})); }

int Tape::matmul(int a, int b) {
  check2(a);
  check2(b);
  check_data(cols(a) == rows(b),
             "matmul: inner dimensions disagree, " + describe(a) + " @ " + describe(b));
  Node n;
  n.op = Op::matmul;
  n.a = a;
  n.b = b;
  n.shape = {rows(a), cols(b)};
  return push(std::move(n));
}

int Tape::transpose(int a) {
  check2(a);
  Node n;
  n.op = Op::transpose2;
  n.a = a;
  n.shape = {cols(a), rows(a)};
  return push(std::move(n));
}

static Node binary(Op op, int a, int b, std::vector<int> shape) {
  Node n;
  n.op = op;
  n.a = a;
  n.b = b;
  n.shape = std::move(shape);
  return n;
}

int Tape::add(int a, int b) {
  check2(a);
  check2(b);
  check_data(shape(a) == shape(b), "add: shape mismatch, " + describe(a) + " vs " + describe(b));
  return push(binary(Op::add, a, b, shape(a)));
}

int Tape::sub(int a, int b) {
  check2(a);
  check2(b);
  check_data(shape(a) == shape(b), "sub: shape mismatch, " + describe(a) + " vs " + describe(b));
  return push(binary(Op::sub, a, b, shape(a)));
}

int Tape::mul(int a, int b) {
  check2(a);
  check2(b);
  check_data(shape(a) == shape(b), "mul: shape mismatch, " + describe(a) + " vs " + describe(b));
  return push(binary(Op::mul, a, b, shape(a)));
}

int Tape::add_row(int a, int bias) {
  check2(a);
  check2(bias);
  check_data(rows(bias) == 1 && cols(bias) == cols(a),
             "add_row: bias must be [1," + std::to_string(cols(a)) + "], got " + describe(bias));
  return push(binary(Op::add_row, a, bias, shape(a)));
}

int Tape::mul_col(int a, int colv) {
  check2(a);
  check2(colv);
  check_data(cols(colv) == 1 && rows(colv) == rows(a),
             "mul_col: column must be [" + std::to_string(rows(a)) + ",1], got " + describe(colv));
  return push(binary(Op::mul_col, a, colv, shape(a)));
}

static Node unary(Op op, int a, std::vector<int> shape) {
  Node n;
  n.op = op;
  n.a = a;
  n.shape = std::move(shape);
  return n;
}

int Tape::scale(int a, float s) {
  check2(a);
  Node n = unary(Op::scale, a, shape(a));
  n.c0 = s;
  return push(std::move(n));
}

int Tape::add_const(int a, float c) {
  check2(a);
  Node n = unary(Op::add_const, a, shape(a));
  n.c0 = c;
  return push(std::move(n));
}

int Tape::relu(int a) {
  check2(a);
  return push(unary(Op::relu, a, shape(a)));
}

int Tape::tanh(int a) {
  check2(a);
  return push(unary(Op::tanh_act, a, shape(a)));
}

int Tape::sigmoid(int a) {
  check2(a);
  return push(unary(Op::sigmoid, a, shape(a)));
}

int Tape::exp(int a) {
  check2(a);
  return push(unary(Op::exp_elem, a, shape(a)));
}

int Tape::log(int a) {
  check2(a);
  return push(unary(Op::log_elem, a, shape(a)));
}

int Tape::clamp(int a, float lo, float hi) {
  check2(a);
  check_data(lo < hi, "clamp: empty interval");
  Node n = unary(Op::clamp, a, shape(a));
  n.c0 = lo;
  n.c1 = hi;
  return push(std::move(n));
}

int Tape::huber(int a) {
  check2(a);
  return push(unary(Op::huber, a, shape(a)));
}

int Tape::softmax_rows(int a) {
  check2(a);
  return push(unary(Op::softmax_rows, a, shape(a)));
}

int Tape::segment_softmax(int scores, std::vector<int> seg, int n_seg) {
  check2(scores);
  check_data(cols(scores) == 1, "segment_softmax: scores must be a column, got " + describe(scores));
  check_data(int(seg.size()) == rows(scores), "segment_softmax: segment count mismatch");
  for (int s : seg) check_data(s >= 0 && s < n_seg, "segment_softmax: segment id out of range");
  Node n = unary(Op::segment_softmax, scores, shape(scores));
  n.idx = std::move(seg);
  n.n_out = n_seg;
  return push(std::move(n));
}

int Tape::sum_all(int a) {
  check2(a);
  return push(unary(Op::sum_all, a, {1, 1}));
}

int Tape::mean_all(int a) {
  check2(a);
  return push(unary(Op::mean_all, a, {1, 1}));
}

int Tape::gather_rows(int a, std::vector<int> idx) {
  check2(a);
  check_data(!idx.empty(), "gather_rows: empty index list");
  for (int i : idx)
    check_data(i >= 0 && i < rows(a), "gather_rows: row index out of range for " + describe(a));
  Node n = unary(Op::gather_rows, a, {int(idx.size()), cols(a)});
  n.idx = std::move(idx);
  return push(std::move(n));
}

int Tape::scatter_add_rows(int a, std::vector<int> idx, int n_out) {
  check2(a);
  check_data(int(idx.size()) == rows(a), "scatter_add_rows: one target per row required");
  check_data(n_out > 0, "scatter_add_rows: non-positive output rows");
  for (int i : idx) check_data(i >= 0 && i < n_out, "scatter_add_rows: target out of range");
  Node n = unary(Op::scatter_add_rows, a, {n_out, cols(a)});
  n.idx = std::move(idx);
  n.n_out = n_out;
  return push(std::move(n));
}

int Tape::concat_rows(int a, int b) {
  check2(a);
  check2(b);
  check_data(cols(a) == cols(b),
             "concat_rows: column mismatch, " + describe(a) + " vs " + describe(b));
  return push(binary(Op::concat_rows, a, b, {rows(a) + rows(b), cols(a)}));
}

int Tape::concat_cols(int a, int b) {
  check2(a);
  check2(b);
  check_data(rows(a) == rows(b), "concat_cols: row mismatch, " + describe(a) + " vs " + describe(b));
  return push(binary(Op::concat_cols, a, b, {rows(a), cols(a) + cols(b)}));
}

int Tape::reshape(int a, int r, int c) {
  check2(a);
  check_data(int64_t(r) * c == count(a), "reshape: element count mismatch for " + describe(a) +
                                             " -> [" + std::to_string(r) + "," + std::to_string(c) +
                                             "]");
  return push(unary(Op::reshape, a, {r, c}));
}

int Tape::cumsum_rows(int a) {
  check2(a);
  return push(unary(Op::cumsum_rows, a, shape(a)));
}

}  // namespace tae
