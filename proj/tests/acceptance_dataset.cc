#include <exception>

#include "dataset_checks.h"

int main() {
  try {
    bool pass = false;
    if (!sdoh::acceptance::run_dataset_criteria(pass)) return 77;
    return pass ? 0 : 1;
  } catch (const std::exception& e) {
    std::printf("FAIL    dataset criteria: %s\n", e.what());
    return 1;
  }
}
