// Regenerates the bundled synthetic logistic-regression datasets in data/.
#include "nchmc/dataset.hpp"

#include <iostream>

int main(int argc, char** argv) {
  const std::filesystem::path dir = argc > 1 ? argv[1] : "data";
  try {
    std::filesystem::create_directories(dir);
    nchmc::Vector beta_a(4), beta_b(6);
    beta_a << 1.0, -0.5, 0.25, 0.0;
    beta_b << 0.8, -1.2, 0.3, 0.0, 0.5, -0.4;
    nchmc::write_labelled_csv(dir / "synthetic_a.csv",
                              nchmc::synthetic_logistic_dataset(2024, 150, beta_a));
    nchmc::write_labelled_csv(dir / "synthetic_b.csv",
                              nchmc::synthetic_logistic_dataset(2025, 200, beta_b));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
