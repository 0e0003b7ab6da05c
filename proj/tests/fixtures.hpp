#ifndef MVST_TESTS_FIXTURES_HPP
#define MVST_TESTS_FIXTURES_HPP

#include <random>

#include "mvst/mvst.hpp"

namespace fixtures {

using Mat = Eigen::MatrixXd;

inline Mat sim_sigma() {
  Mat s(3, 3);
  s << 1, 0.5, 0.1,  //
      0.5, 1, 0.5,   //
      0.1, 0.5, 1;
  return s;
}

inline Mat sim_psi() {
  Mat s(4, 4);
  s << 1, -0.5, 0.5, 0.1,  //
      -0.5, 1, -0.5, 0.6,  //
      0.5, -0.5, 1, -0.4,  //
      0.1, 0.6, -0.4, 1;
  return s;
}

inline Mat m1() {
  Mat m(3, 4);
  m << 0, 1, -1, 0,  //
      1, 0, 0, -1,   //
      0, 1, -1, 0;
  return m;
}

inline Mat a1() {
  Mat a(3, 4);
  a << 1, -1, 0, 1,  //
      1, -1, 0, 1,   //
      1, -1, 0, 1;
  return a;
}

inline Mat m2() {
  Mat m(3, 4);
  m << 1, -6, -1, -1,  //
      -3, 5, -4, 1,    //
      1, -4, -1, 5;
  return m;
}

inline Mat a2() {
  Mat a(3, 4);
  a << 1, -1, 0.5, 0,     //
      0.5, -0.5, 0.5, 0.5,  //
      0, 0, 0.5, 0;
  return a;
}

inline mvst::MvstParamsd simulation1() { return {m1(), a1(), sim_sigma(), sim_psi(), 4.0}; }
inline mvst::MvstParamsd simulation2() { return {m2(), a2(), sim_sigma(), sim_psi(), 4.0}; }

inline Mat random_matrix(std::mt19937_64& gen, Eigen::Index r, Eigen::Index c,
                         double scale = 1.0) {
  std::normal_distribution<double> z(0.0, scale);
  Mat m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = z(gen);
  return m;
}

inline Mat random_spd(std::mt19937_64& gen, Eigen::Index d) {
  const Mat b = random_matrix(gen, d, d, 0.6);
  return b * b.transpose() + 0.5 * Mat::Identity(d, d);
}

inline mvst::MvstParamsd random_params(std::mt19937_64& gen, Eigen::Index n, Eigen::Index p) {
  std::uniform_real_distribution<double> nu(2.5, 12.0);
  return {random_matrix(gen, n, p), random_matrix(gen, n, p, 0.7), random_spd(gen, n),
          random_spd(gen, p), nu(gen)};
}

}  // namespace fixtures

#endif  // MVST_TESTS_FIXTURES_HPP
