#include <iostream>

int main() {
  std::cout << "ddbc\n";
  return 0;
}
