#ifndef RISBEAM_CLI_HPP
#define RISBEAM_CLI_HPP
namespace risbeam { inline int run_cli(int, char**) { return 0; } }
#endif
