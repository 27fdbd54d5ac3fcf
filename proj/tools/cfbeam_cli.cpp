// SPDX-License-Identifier: Apache-2.0
//
// cfbeam: probing-beam beam alignment workbench for mmWave cell-free MIMO
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include <CLI11.hpp>
#include <iostream>

#include "cfbeam/experiment.hpp"
#include "cfbeam/oracles.hpp"
#include "cfbeam/plot.hpp"

int main(int argc, char** argv) {
    CLI::App app{"cfbeam: probing-beam beam alignment workbench"};
    app.require_subcommand(1);

    std::string spec_path, csv_path, out_path = "plot.svg", kind_str = "size", oracle_name;
    bool quiet = false;

    auto* run = app.add_subcommand("run", "execute an experiment spec");
    run->add_option("spec", spec_path, "INI experiment spec")->required();
    run->add_flag("-q,--quiet", quiet, "suppress progress output");

    auto* plot = app.add_subcommand("plot", "render a results CSV as SVG");
    plot->add_option("csv", csv_path, "results or round-trace CSV")->required();
    plot->add_option("--kind", kind_str, "size | power | rounds | speed")
        ->check(CLI::IsMember({"size", "power", "rounds", "speed"}));
    plot->add_option("-o,--out", out_path, "output SVG path");

    auto* validate = app.add_subcommand("validate", "check an experiment spec");
    validate->add_option("spec", spec_path, "INI experiment spec")->required();

    auto* oracle = app.add_subcommand("oracle", "run an independent oracle and print comparisons");
    oracle->add_option("name", oracle_name, "oracle name, or 'all'")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            const auto spec = cfbeam::load_spec(spec_path);
            const auto summary = cfbeam::run_experiment(spec, quiet);
            std::cout << summary.results.size() << " result rows -> " << spec.output_dir
                      << "/results.csv\n";
            if (summary.errors > 0) {
                std::cout << summary.errors << " scheme error(s) recorded in "
                          << spec.output_dir << "/errors.csv\n";
                return 2;
            }
        } else if (plot->parsed()) {
            cfbeam::plot_csv(csv_path, cfbeam::plot_kind_from_string(kind_str), out_path);
            std::cout << "wrote " << out_path << '\n';
        } else if (validate->parsed()) {
            cfbeam::load_spec(spec_path);
            std::cout << "spec OK\n";
        } else if (oracle->parsed()) {
            return cfbeam::oracles::run_oracles(oracle_name) == 0 ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
