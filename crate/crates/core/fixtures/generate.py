import json, os
OUT=os.path.dirname(os.path.abspath(__file__))
PH=['A','B','C']
# conductor configuration, ohm/mile and microsiemens/mile (overhead 4-wire, 556/500 ACSR class)
ZM={('A','A'):(0.3465,1.0179),('A','B'):(0.1560,0.5017),('A','C'):(0.1580,0.4236),
    ('B','B'):(0.3375,1.0478),('B','C'):(0.1535,0.3849),('C','C'):(0.3414,1.0348)}
BM={('A','A'):6.2998,('A','B'):-1.9958,('A','C'):-1.2595,('B','B'):5.9597,('B','C'):-0.7417,('C','C'):5.6386}
def zz(a,b,tab):
    return tab[(a,b)] if (a,b) in tab else tab[(b,a)]
def line(id,f,t,phases,miles,shunt=True,coupled=True):
    z=[[ [round(zz(a,b,ZM)[0]*miles,6), round(zz(a,b,ZM)[1]*miles,6)] if (coupled or a==b) else [0.0,0.0] for b in phases] for a in phases]
    d={'id':id,'from':f,'to':t,'phases':phases,'z':z}
    if shunt:
        d['b_shunt']=[[ round(zz(a,b,BM)*miles*1e-6,12) if (coupled or a==b) else 0.0 for b in phases] for a in phases]
    return d
def xfmr(id,f,t,phases,r,x):
    return {'id':id,'from':f,'to':t,'phases':phases,'z':[[[r,x] if a==b else [0.0,0.0] for b in phases] for a in phases]}
VLN=7200.0
def bus(id,phases=PH,v=VLN): return {'id':id,'phases':phases,'nominal_voltage':v}
def load(id,b,phases,pq,model=None):
    d={'id':id,'bus':b,'phases':phases,'connection':'wye','power_va':[list(x) for x in pq]}
    if model: d['model']=model
    return d
FIELD_SPECTRUM=[(3,2.83),(5,0.52),(7,0.84),(9,0.21),(11,0.03)]
def source(id,b,phases,base,angle=0.0,spec=FIELD_SPECTRUM):
    return {'id':id,'bus':b,'phases':phases,'fundamental_base_a':base,
            'spectrum':[{'order':h,'magnitude_pct':m,'angle_deg':angle} for h,m in spec],'sequence':'auto'}
Z1=(0.08,0.6); Z0=(0.12,1.0)
ZS=(round((Z0[0]+2*Z1[0])/3,6),round((Z0[1]+2*Z1[1])/3,6)); ZMU=(round((Z0[0]-Z1[0])/3,6),round((Z0[1]-Z1[1])/3,6))
def substation(b='sub',coupled=True,selfz=ZS,mut=ZMU):
    return {'id':'source','bus':b,
            'voltage':[{'magnitude':VLN,'angle_deg':a} for a in (0.0,-120.0,120.0)],
            'z':[[list(selfz) if i==j else (list(mut) if coupled else [0.0,0.0]) for j in range(3)] for i in range(3)]}
BASE={'frequency_hz':60.0,'power_va':3.0e6}
def flat(x):
    return not isinstance(x,(dict,list)) or (isinstance(x,list) and all(not isinstance(e,dict) and (not isinstance(e,list) or all(not isinstance(q,(list,dict)) for q in e)) for e in x))
def pretty(x,ind):
    pad='  '*(ind+1); end='  '*ind
    if flat(x): return json.dumps(x)
    if isinstance(x,dict):
        return '{\n'+',\n'.join(pad+json.dumps(k)+': '+pretty(v,ind+1) for k,v in x.items())+'\n'+end+'}'
    return '[\n'+',\n'.join(pad+pretty(v,ind+1) for v in x)+'\n'+end+']'
def write(name,d):
    with open(os.path.join(OUT,name+'.json'),'w') as f:
        f.write(pretty(d,0)); f.write('\n')

write('feeder_2bus',{'base':BASE,'buses':[bus('sub'),bus('b2')],
  'branches':[line('L1','sub','b2',PH,0.5)],
  'loads':[load('ld2','b2',PH,[(650e3,210e3)]*3)],
  'sources':[source('hs1','b2',PH,95.0)],
  'substation':substation()})

write('feeder_cancel',{'base':BASE,'buses':[bus('sub'),bus('b1')],
  'branches':[line('L1','sub','b1',PH,1.0)],
  'loads':[load('ld1','b1',PH,[(500e3,150e3)]*3)],
  'sources':[source('hs1','b1',PH,100.0,0.0,[(3,2.83)]),source('hs2','b1',PH,100.0,180.0,[(3,2.83)])],
  'substation':substation()})

write('feeder_coupled3',{'base':BASE,'buses':[bus('sub'),bus('b1'),bus('b2')],
  'branches':[line('L1','sub','b1',PH,0.5),line('L2','b1','b2',PH,0.5)],
  'loads':[load('ld1','b1',PH,[(300e3,100e3),(250e3,80e3),(320e3,90e3)]),
           load('ld2','b2',PH,[(400e3,120e3),(380e3,110e3),(350e3,100e3)])],
  'sources':[source('hs1','b2',['B'],50.0)],
  'substation':substation()})

write('feeder_stiff',{'base':BASE,'buses':[bus('sub'),bus('mid'),bus('cust',PH,277.0)],
  'branches':[line('L1','sub','mid',PH,1.0),xfmr('T1','mid','cust',PH,4.34,17.35)],
  'loads':[load('ldc','cust',PH,[(130e3,40e3)]*3)],
  'sources':[source('hs1','mid',PH,50.0)],
  'substation':substation()})

write('feeder_loop',{'base':BASE,'buses':[bus('sub'),bus('b1'),bus('b2')],
  'branches':[line('L1','sub','b1',PH,0.5),line('L2','b1','b2',PH,0.5),line('L3','sub','b2',PH,0.8)],
  'loads':[load('ld2','b2',PH,[(300e3,100e3)]*3)],
  'sources':[],
  'substation':substation()})

AC=['A','C']; B=['B']; C=['C']
write('feeder_y13',{'base':BASE,
  'buses':[bus('sub'),bus('n1'),bus('n2'),bus('n3'),bus('cust',PH,277.0),bus('n4'),bus('n5'),
           bus('n6',AC),bus('n7',B),bus('n8',B),bus('n9',C),bus('n10'),bus('n11')],
  'branches':[line('L01','sub','n1',PH,0.4),line('L12','n1','n2',PH,0.1),line('L23','n2','n3',PH,0.2),
              xfmr('T3','n3','cust',PH,4.34,17.35),line('L14','n1','n4',PH,0.3),line('L45','n4','n5',PH,0.2),
              line('L56','n5','n6',AC,0.1),line('L47','n4','n7',B,0.15),line('L78','n7','n8',B,0.1),
              line('L19','n1','n9',C,0.2),line('L510','n5','n10',PH,0.1),line('L1011','n10','n11',PH,0.1)],
  'loads':[load('ld2','n2',PH,[(120e3,40e3),(100e3,35e3),(140e3,45e3)]),
           load('ld3','n3',PH,[(200e3,60e3)]*3,'constant_impedance'),
           load('ldc','cust',PH,[(110e3,35e3),(95e3,30e3),(120e3,40e3)]),
           load('ld5','n5',PH,[(160e3,50e3),(60e3,20e3),(110e3,40e3)]),
           load('ld6','n6',AC,[(80e3,25e3),(90e3,30e3)]),
           load('ld8','n8',B,[(120e3,40e3)],'constant_current'),
           load('ld9','n9',C,[(100e3,30e3)]),
           load('ld11','n11',PH,[(150e3,45e3),(150e3,45e3),(130e3,40e3)])],
  'sources':[source('hs1','n3',PH,40.0),source('hs2','n11',PH,40.0)],
  'substation':substation()})
