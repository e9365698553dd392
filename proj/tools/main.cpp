#include <cstdio>

namespace dimerlab {
const char* version_string();
}

int main(int argc, char** argv) {
  (void)argc;
  (void)argv;
  std::printf("%s\n", dimerlab::version_string());
  return 0;
}
