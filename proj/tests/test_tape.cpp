#include <doctest.h>

#include "semsurf/tape.hpp"

using namespace semsurf;
using Mat = MatX<double>;

namespace {

Mat random_mat(Eigen::Index r, Eigen::Index c, Rng& rng, double scale = 1.0) {
  Mat m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = scale * rng.normal();
  return m;
}

/// Central finite differences of a scalar graph output with respect to every
/// parameter, with detached values frozen. Returns the max relative error
/// against the analytic gradients.
double gradcheck(Graph<double>& g, int loss, ParamStore<double>& store, double h = 1e-6) {
  g.forward();
  auto sink = store.make_sink();
  g.backward(loss, sink);

  g.freeze_detach = true;
  double max_rel = 0.0;
  for (std::size_t p = 0; p < store.values.size(); ++p) {
    Mat& theta = store.values[p];
    for (Eigen::Index i = 0; i < theta.rows(); ++i)
      for (Eigen::Index j = 0; j < theta.cols(); ++j) {
        const double orig = theta(i, j);
        theta(i, j) = orig + h;
        g.forward();
        const double plus = g.value(loss)(0, 0);
        theta(i, j) = orig - h;
        g.forward();
        const double minus = g.value(loss)(0, 0);
        theta(i, j) = orig;
        const double fd = (plus - minus) / (2 * h);
        const double an = sink[p](i, j);
        const double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-6});
        max_rel = std::max(max_rel, rel);
      }
  }
  g.freeze_detach = false;
  g.forward();
  return max_rel;
}

}  // namespace

TEST_CASE("linear + activation gradients match finite differences") {
  Rng rng(42);
  ParamStore<double> store;
  const int w = store.add(random_mat(4, 3, rng, 0.5));
  const int b = store.add(random_mat(4, 1, rng, 0.2));
  const Mat x = random_mat(7, 3, rng);

  for (Act act : {Act::Softplus, Act::Sigmoid, Act::Exp, Act::Square}) {
    Graph<double> g(&store);
    int y = g_linear(g, g_const(g, x), g_param(g, w), g_param(g, b));
    y = g_act(g, y, act, 2.0);
    const int loss = g_sum_all(g, g_act(g, y, Act::Square));
    CHECK(gradcheck(g, loss, store) < 1e-7);
  }
}

TEST_CASE("binary ops, scaling and reductions differentiate correctly") {
  Rng rng(7);
  ParamStore<double> store;
  const int a = store.add(random_mat(5, 4, rng));
  const int b = store.add(random_mat(5, 4, rng, 0.5).array().abs().matrix() + 0.5);
  const int s = store.add(random_mat(1, 1, rng, 0.3));

  Graph<double> g(&store);
  const int na = g_param(g, a), nb = g_param(g, b);
  int y = g_mul(g, g_add(g, na, nb), g_div(g, na, nb));
  y = g_scalar_mul(g, y, g_act(g, g_param(g, s), Act::Exp));
  y = g_affine(g, y, 0.7, 0.1);
  const int loss = g_sum_all(g, g_rowsum(g, y));
  CHECK(gradcheck(g, loss, store) < 1e-7);
}

TEST_CASE("concat, slice, rows, reshape, colscale, segsum") {
  Rng rng(11);
  ParamStore<double> store;
  const int a = store.add(random_mat(6, 2, rng));
  const int b = store.add(random_mat(6, 3, rng));
  const int v = store.add(random_mat(6, 1, rng));

  Graph<double> g(&store);
  int cat = g_concat<double>(g, {g_param(g, a), g_param(g, b)});  // 6x5
  int sl = g_cols(g, cat, 1, 3);                                  // 6x3
  int rw = g_rows(g, sl, 1, 4);                                   // 4x3
  int rs = g_reshape(g, rw, 6, 2);
  int cs = g_colscale(g, g_param(g, b), g_param(g, v));  // 6x3
  int seg = g_segsum(g, cs, 3);                          // 2x3
  const int loss =
      g_add(g, g_sum_all(g, g_act(g, rs, Act::Square)), g_sum_all(g, g_act(g, seg, Act::Square)));
  CHECK(gradcheck(g, loss, store) < 1e-7);
}

TEST_CASE("transmittance weights match the closed form and differentiate") {
  Rng rng(3);
  ParamStore<double> store;
  // alphas in (0, 1) via sigmoid of a parameter
  const int raw = store.add(random_mat(4, 6, rng));

  Graph<double> g(&store);
  const int alpha = g_act(g, g_param(g, raw), Act::Sigmoid);
  const int w = g_transmittance(g, alpha);
  g.forward();

  const Mat& A = g.value(alpha);
  const Mat& W = g.value(w);
  for (Eigen::Index r = 0; r < A.rows(); ++r) {
    double t = 1.0;
    double sum = 0.0;
    for (Eigen::Index i = 0; i < A.cols(); ++i) {
      CHECK(W(r, i) == doctest::Approx(A(r, i) * t).epsilon(1e-12));
      t *= 1.0 - A(r, i);
      sum += W(r, i);
      CHECK(t >= 0.0);
    }
    CHECK(sum <= 1.0 + 1e-6);
  }

  const int loss = g_sum_all(g, g_act(g, w, Act::Square));
  CHECK(gradcheck(g, loss, store) < 1e-7);
}

TEST_CASE("normalize rows and sqrt norms differentiate") {
  Rng rng(19);
  ParamStore<double> store;
  const int a = store.add(random_mat(8, 3, rng).array().matrix() + 0.8);

  Graph<double> g(&store);
  const int n = g_normalize_rows(g, g_param(g, a));
  const int norm = g_act(g, g_rowsum(g, g_act(g, g_param(g, a), Act::Square)), Act::Sqrt);
  const int res = g_act(g, g_affine(g, norm, 1.0, -1.0), Act::Square);
  const int loss = g_add(g, g_sum_all(g, g_act(g, n, Act::Square)), g_sum_all(g, res));
  CHECK(gradcheck(g, loss, store) < 1e-6);

  g.forward();
  for (Eigen::Index r = 0; r < 8; ++r)
    CHECK(g.value(n).row(r).norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("cross entropy matches -log softmax and differentiates") {
  Rng rng(23);
  ParamStore<double> store;
  const int logits = store.add(random_mat(5, 4, rng));
  std::vector<int> labels = {0, 3, -1, 2, 1};

  Graph<double> g(&store);
  const int ce = g_cross_entropy(g, g_param(g, logits), labels);
  const int loss = g_sum_all(g, ce);
  g.forward();

  const Mat& X = store.values[std::size_t(logits)];
  for (Eigen::Index r = 0; r < 5; ++r) {
    if (labels[std::size_t(r)] < 0) {
      CHECK(g.value(ce)(r, 0) == 0.0);
      continue;
    }
    const double lse = std::log((X.row(r).array() - X.row(r).maxCoeff()).exp().sum()) +
                       X.row(r).maxCoeff();
    CHECK(g.value(ce)(r, 0) == doctest::Approx(lse - X(r, labels[std::size_t(r)])).epsilon(1e-12));
  }
  CHECK(gradcheck(g, loss, store) < 1e-7);

  SUBCASE("label out of range is an input error") {
    Graph<double> bad(&store);
    const int node = g_cross_entropy(bad, g_param(bad, logits), std::vector<int>{0, 1, 2, 3, 4});
    (void)node;
    CHECK_THROWS_AS(bad.forward(), input_error);
  }
}

TEST_CASE("detach blocks gradients and freezes during replay") {
  Rng rng(31);
  ParamStore<double> store;
  const int a = store.add(random_mat(3, 3, rng));

  Graph<double> g(&store);
  const int pa = g_param(g, a);
  const int d = g_detach(g, pa);
  const int loss = g_sum_all(g, g_mul(g, pa, d));  // = sum a * stop(a)
  g.forward();
  auto sink = store.make_sink();
  g.backward(loss, sink);
  // d(sum a*stop(a))/da = stop(a), not 2a
  CHECK((sink[std::size_t(a)] - store.values[std::size_t(a)]).cwiseAbs().maxCoeff() < 1e-14);

  // frozen replay keeps the detached value when the parameter moves
  g.freeze_detach = true;
  const double before = g.value(loss)(0, 0);
  store.values[std::size_t(a)].array() += 0.5;
  g.forward();
  const Mat detached = g.value(d);
  store.values[std::size_t(a)].array() -= 0.5;
  g.forward();
  CHECK((g.value(d) - detached).cwiseAbs().maxCoeff() == 0.0);
  CHECK(g.value(loss)(0, 0) == doctest::Approx(before).epsilon(1e-12));
}

TEST_CASE("backward before forward is a usage error") {
  ParamStore<double> store;
  Rng rng(1);
  const int a = store.add(random_mat(2, 2, rng));
  Graph<double> g(&store);
  const int loss = g_sum_all(g, g_param(g, a));
  auto sink = store.make_sink();
  CHECK_THROWS_AS(g.backward(loss, sink), usage_error);
}

TEST_CASE("zero loss produces zero gradients, quadratic its analytic ones") {
  Rng rng(2);
  ParamStore<double> store;
  const int a = store.add(random_mat(3, 2, rng));

  Graph<double> g(&store);
  const int pa = g_param(g, a);
  const int zero = g_sum_all(g, g_affine(g, pa, 0.0, 0.0));
  const int quad = g_sum_all(g, g_act(g, pa, Act::Square));
  g.forward();

  auto sink = store.make_sink();
  g.backward(zero, sink);
  CHECK(sink[std::size_t(a)].cwiseAbs().maxCoeff() == 0.0);

  auto sink2 = store.make_sink();
  g.backward(quad, sink2);
  CHECK((sink2[std::size_t(a)] - 2.0 * store.values[std::size_t(a)]).cwiseAbs().maxCoeff() <
        1e-14);
}
