// Copyright 2026-present the kkengine project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <CLI11.hpp>

#include <exception>
#include <iostream>
#include <string>

#include "kk/demo_tasks.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Catalog and model utilities"};
    app.require_subcommand(1);

    std::string out_dir;
    kk::demo::DemoOptions options;
    bool no_images = false;
    auto* gen = app.add_subcommand("gen-demo", "write a synthetic catalog, trained models and a service config");
    gen->add_option("--out", out_dir, "output directory")->required();
    gen->add_option("--seed", options.seed);
    gen->add_option("--index-kind", options.index_kind);
    gen->add_option("--persons", options.persons);
    gen->add_flag("--no-images", no_images, "skip placeholder SVGs");

    CLI11_PARSE(app, argc, argv);

    try {
        options.images = !no_images;
        std::cout << kk::demo::write_demo(out_dir, options) << '\n';
    } catch (const std::exception& e) {
        std::cerr << "kkctl: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
