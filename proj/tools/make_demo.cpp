// Writes a small CSV drawn from the JTPA-style design with one covariate.

#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "ivqr/common/error.hpp"
#include "ivqr/simlab/dgp.hpp"

int main(int argc, char** argv) {
  ivqr::simlab::JtpaSpec spec;
  spec.q = 1;
  spec.n = 200;
  spec.seed = 20240611;
  std::string out = "demo.csv";

  CLI::App app{"Generate the demo data set", "ivqr_make_demo"};
  app.add_option("--n", spec.n, "Rows");
  app.add_option("--seed", spec.seed, "Generator seed");
  app.add_option("--out", out, "Output CSV path");
  CLI11_PARSE(app, argc, argv);

  try {
    const ivqr::Dataset d = ivqr::simlab::generate_jtpa_like(spec);
    std::ofstream file(out);
    if (!file) throw ivqr::DataError("cannot open '" + out + "'", "io");
    // Column order: outcome, regressors (const, d, w1, dw1), then the
    // instruments not already present (s, sw1).
    file << "y,const,d,w1,dw1,s,sw1\n";
    char buf[32];
    const auto put = [&](double v, char sep) {
      std::snprintf(buf, sizeof buf, "%.17g", v + 0.0);  // no "-0"
      file << buf << sep;
    };
    for (Eigen::Index i = 0; i < d.n(); ++i) {
      put(d.y()(i), ',');
      for (Eigen::Index k = 0; k < 4; ++k) put(d.x()(i, k), ',');
      put(d.z()(i, 1), ',');
      put(d.z()(i, 3), '\n');
    }
  } catch (const ivqr::Error& e) {
    std::cerr << e.what() << '\n';
    return 3;
  }
  return 0;
}
