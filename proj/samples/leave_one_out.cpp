// Trains on 30 perturbed demands of a small mesh, then solves one held-out
// demand with the exact method and two neighbor-based methods.
//
//   leave_one_out [network.net]

#include <cstdio>
#include <iostream>
#include <vector>

#include "otsknn/bench.hpp"
#include "otsknn/grid_io.hpp"
#include "otsknn/knn.hpp"

using namespace otsknn;

int main(int argc, char** argv) {
  const std::string path = argc > 1 ? argv[1] : std::string(OTSKNN_SAMPLE_DATA) + "/mesh_b.net";
  const Network net = load_native(path);

  auto fam = generate_instances(net, 31, 42);
  const std::vector<double> held_out = fam.demands.back();
  fam.demands.pop_back();

  const TrainingStore store = build_training_store(net, fam);
  std::printf("%zu training records, %zu switchable lines\n", store.records.size(), net.switchable_count());

  for (Method m : {Method::Ben, Method::KnnD, Method::KnnBM}) {
    const auto out = run_method(m, store.records, net, held_out, 10);
    std::printf("%-8s cost %-12.4f fixed %-3zu nodes %-4ld %.4f s\n", to_string(m), out.cost.value_or_inf(),
                out.fixed_binaries, out.nodes, out.wall_time);
  }
}
