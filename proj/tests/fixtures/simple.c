struct point { int x; int y; };
struct point p;

int f(int a)
{
  int b = a;
  return b;
}

int g(void)
{
  return p.x;
}

int main(void)
{
  return f(1) + g();
}
